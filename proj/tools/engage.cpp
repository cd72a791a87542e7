#include <atomic>
#include <csignal>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "engage/errors.hpp"
#include "engage/pipeline.hpp"
#include "engage/session.hpp"
#include "engage/training.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

int cmd_run(const std::string& mode, const std::string& input, const std::string& config_path,
            const std::string& report, const std::string& plot_dir, const std::string& plot_format, int stride) {
    engage::PipelineConfig config;
    try {
        if (!config_path.empty()) config = engage::load_config(config_path);
        if (!mode.empty()) {
            const auto m = engage::parse_source_mode(mode);
            if (!m) throw engage::ConfigError("unknown mode `" + mode + "`");
            config.mode = *m;
        }
        if (!input.empty()) config.input = input;
        if (!report.empty()) config.report_path = report;
        if (!plot_dir.empty()) config.plot_dir = plot_dir;
        if (!plot_format.empty()) config.plot_format = plot_format;
        if (stride > 0) config.stride = stride;
    } catch (const engage::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    return engage::run(config, std::cerr, &g_stop);
}

int cmd_train(const std::string& task_name, const std::string& data, int epochs, const std::string& out,
              engage::TrainOptions options) {
    const auto task = engage::parse_train_task(task_name);
    if (!task) {
        std::cerr << "unknown task `" << task_name << "`\n";
        return 1;
    }
    options.epochs = epochs;
    options.on_epoch = [&](const engage::EpochRecord& r) {
        std::cerr << "epoch " << r.epoch << "/" << epochs << "  loss " << std::fixed << std::setprecision(4) << r.loss
                  << "  train_acc " << r.train_acc << "  val_acc " << r.val_acc << '\n';
    };
    try {
        const auto run = engage::train_model(*task, data, out, options);
        std::cout << "model: " << run.model_path << "\ncurve: " << run.curve_path << '\n';
        if (!run.plot_path.empty()) std::cout << "plot: " << run.plot_path << '\n';
        if (run.test_acc) std::cout << "test_acc: " << *run.test_acc << '\n';
        return 0;
    } catch (const engage::DatasetError& e) {
        std::cerr << "dataset error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

int cmd_evaluate(const std::string& model, const std::string& data) {
    try {
        std::cout << "accuracy: " << std::fixed << std::setprecision(4) << engage::evaluate_model(model, data) << '\n';
        return 0;
    } catch (const engage::ModelLoadError& e) {
        std::cerr << "model error: " << e.what() << '\n';
        return 1;
    } catch (const engage::DatasetError& e) {
        std::cerr << "dataset error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

void print_stats(const char* name, const engage::ColumnStats& s) {
    std::cout << std::left << std::setw(12) << name << std::right << std::fixed << std::setprecision(2)
              << std::setw(10) << s.mean << std::setw(10) << s.mode << std::setw(10) << s.stddev << '\n';
}

int cmd_quiz(const std::string& path, bool sample_sd, int score_threshold, double ci_threshold) {
    try {
        const auto records = engage::read_quiz_csv(path);
        const auto summary = engage::aggregate_quiz_table(
            records, sample_sd ? engage::DeviationKind::Sample : engage::DeviationKind::Population);
        std::cout << std::left << std::setw(12) << "column" << std::right << std::setw(10) << "mean" << std::setw(10)
                  << "mode" << std::setw(10) << "stddev" << '\n';
        for (std::size_t q = 0; q < summary.question_score.size(); ++q) {
            const std::string base = "q" + std::to_string(q + 1);
            print_stats((base + "_score").c_str(), summary.question_score[q]);
            print_stats((base + "_ci").c_str(), summary.question_ci[q]);
        }
        print_stats("total_score", summary.total_score);
        print_stats("total_ci", summary.total_ci);
        try {
            const double r = engage::engagement_score_correlation(records, score_threshold, ci_threshold);
            std::cout << "engaged share of students scoring >= " << score_threshold << ": " << std::setprecision(4)
                      << r << '\n';
        } catch (const engage::NoQualifyingStudents& e) {
            std::cout << e.what() << '\n';
        }
        return 0;
    } catch (const engage::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Student engagement analyzer"};
    app.require_subcommand(1);

    std::string mode, input, config_path, report, plot_dir, plot_format;
    int stride = 0;
    auto* run = app.add_subcommand("run", "Score a session and write the report");
    run->add_option("--mode", mode, "live | video | events")->check(CLI::IsMember({"live", "video", "events"}));
    run->add_option("--input", input, "Camera index, video path or events CSV");
    run->add_option("--config", config_path, "Config file");
    run->add_option("--report", report, "Report JSON path");
    run->add_option("--plot", plot_dir, "Directory for timeline plots");
    run->add_option("--plot-format", plot_format, "png | svg | jpg");
    run->add_option("--stride", stride, "Process every k-th frame")->check(CLI::PositiveNumber);

    std::string task, data, out, model;
    int epochs = 0;
    engage::TrainOptions options;
    bool no_plot = false;
    auto* train = app.add_subcommand("train", "Train a classifier");
    train->add_option("--task", task, "emotion | attention")->required();
    train->add_option("--data", data, "Dataset directory")->required();
    train->add_option("--epochs", epochs, "Epoch count")->required();
    train->add_option("--out", out, "Model output path")->required();
    train->add_option("--batch-size", options.batch_size, "Minibatch size")->capture_default_str();
    train->add_option("--lr", options.learning_rate, "Adam learning rate")->capture_default_str();
    train->add_option("--seed", options.seed, "Initialization and shuffle seed")->capture_default_str();
    train->add_flag("--flip", options.horizontal_flip, "Random horizontal flips");
    train->add_flag("--no-plot", no_plot, "Skip the curve plot");

    auto* evaluate = app.add_subcommand("evaluate", "Accuracy of a model on a labeled folder");
    evaluate->add_option("--model", model, "Model path")->required();
    evaluate->add_option("--data", data, "Dataset directory")->required();

    std::string quiz_path;
    bool sample_sd = false;
    int score_threshold = 3;
    double ci_threshold = 50.0;
    auto* quiz = app.add_subcommand("quiz", "Summarize a quiz table");
    quiz->add_option("--input", quiz_path, "student_id,q1_score,q1_ci,... CSV")->required();
    quiz->add_flag("--sample-sd", sample_sd, "Use the n-1 standard deviation");
    quiz->add_option("--score-threshold", score_threshold)->capture_default_str();
    quiz->add_option("--ci-threshold", ci_threshold)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    if (*run) return cmd_run(mode, input, config_path, report, plot_dir, plot_format, stride);
    if (*train) {
        options.write_plot = !no_plot;
        return cmd_train(task, data, epochs, out, options);
    }
    if (*evaluate) return cmd_evaluate(model, data);
    if (*quiz) return cmd_quiz(quiz_path, sample_sd, score_threshold, ci_threshold);
    return 1;
}
