#include "engage/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "engage/emotion.hpp"
#include "engage/errors.hpp"
#include "engage/nn/network.hpp"
#include "engage/plot.hpp"

namespace fs = std::filesystem;

namespace engage {

std::optional<TrainTask> parse_train_task(std::string_view name) {
    if (name == "emotion") return TrainTask::Emotion;
    if (name == "attention") return TrainTask::Attention;
    return std::nullopt;
}

std::string_view to_string(TrainTask task) { return task == TrainTask::Emotion ? "emotion" : "attention"; }

int task_input_side(TrainTask task) { return task == TrainTask::Emotion ? 48 : 64; }

std::vector<std::string> task_classes(TrainTask task) {
    if (task == TrainTask::Attention) return {"distracted", "focused"};
    std::vector<std::string> out;
    for (auto label : kEmotionOrder) out.emplace_back(to_string(label));
    return out;
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

int split_bucket(std::string_view name) {
    const auto r = fnv1a(name) % 100;
    if (r < 80) return 0;
    if (r < 90) return 1;
    return 2;
}

namespace {

bool is_image(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".pgm" || ext == ".tif" ||
           ext == ".tiff";
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

struct RawImage {
    std::string path;
    std::string folder;
    std::string split;  // "", train, val, test
};

const std::map<std::string, std::string>& split_names() {
    static const std::map<std::string, std::string> names = {
        {"train", "train"}, {"val", "val"}, {"validation", "val"}, {"test", "test"}};
    return names;
}

bool has_split_folders(const fs::path& root) { return fs::is_directory(root / "train"); }

void collect_class_folders(const fs::path& dir, const std::string& split, std::vector<RawImage>& out) {
    std::vector<fs::path> folders;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory()) folders.push_back(entry.path());
    }
    std::sort(folders.begin(), folders.end());
    for (const auto& folder : folders) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(folder)) {
            if (entry.is_regular_file() && is_image(entry.path())) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) out.push_back({f.string(), folder.filename().string(), split});
    }
}

std::vector<RawImage> scan(const std::string& dataset_dir) {
    const fs::path root(dataset_dir);
    if (!fs::is_directory(root)) throw DatasetError("dataset directory not found: " + dataset_dir);
    std::vector<RawImage> out;
    if (has_split_folders(root)) {
        for (const auto& [name, split] : split_names()) {
            if (fs::is_directory(root / name)) collect_class_folders(root / name, split, out);
        }
    } else {
        collect_class_folders(root, "", out);
    }
    if (out.empty()) throw DatasetError("dataset has no images: " + dataset_dir);
    return out;
}

// Folder name -> class index in task_classes(task).
std::map<std::string, int> label_map(const std::vector<RawImage>& images, TrainTask task) {
    std::set<std::string> folders;
    for (const auto& img : images) folders.insert(img.folder);
    std::map<std::string, int> out;
    if (task == TrainTask::Emotion) {
        for (const auto& f : folders) {
            const auto label = parse_emotion_label(f);
            if (!label) throw DatasetError("unknown emotion folder `" + f + "`");
            out[f] = static_cast<int>(index_of(*label));
        }
    } else {
        std::set<std::string> others;
        bool has_focused = false;
        for (const auto& f : folders) {
            if (lower(f) == "focused") {
                has_focused = true;
                out[f] = 1;
            } else {
                others.insert(lower(f));
                out[f] = 0;
            }
        }
        if (!has_focused || others.size() != 1) {
            throw DatasetError("attention data needs a `focused` folder and exactly one other class folder");
        }
    }
    std::set<int> distinct;
    for (const auto& [f, idx] : out) distinct.insert(idx);
    if (distinct.size() < 2) throw DatasetError("dataset has a single class");
    return out;
}

cv::Mat load_image(const std::string& path, int side) {
    cv::Mat gray = cv::imread(path, cv::IMREAD_GRAYSCALE);
    if (gray.empty()) throw DatasetError("unreadable image: " + path);
    if (gray.rows != side || gray.cols != side) {
        const bool shrink = gray.rows > side || gray.cols > side;
        cv::resize(gray, gray, cv::Size(side, side), 0, 0, shrink ? cv::INTER_AREA : cv::INTER_LINEAR);
    }
    cv::Mat f;
    gray.convertTo(f, CV_32F, 1.0 / 255.0);
    return f;
}

struct Batchable {
    std::vector<float> pixels;  // n * side * side
    std::vector<int> labels;
    int side = 0;

    std::size_t size() const { return labels.size(); }
};

Batchable load_images(const std::vector<LabeledImage>& images, int side) {
    Batchable out;
    out.side = side;
    const std::size_t per = static_cast<std::size_t>(side) * side;
    out.pixels.resize(images.size() * per);
    for (std::size_t i = 0; i < images.size(); ++i) {
        const cv::Mat f = load_image(images[i].path, side);
        std::copy(f.ptr<float>(0), f.ptr<float>(0) + per, out.pixels.begin() + static_cast<std::ptrdiff_t>(i * per));
        out.labels.push_back(images[i].label);
    }
    return out;
}

nn::Tensor gather(const Batchable& data, const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end,
                  std::vector<int>& labels, std::mt19937_64* flip_rng) {
    const int side = data.side;
    const std::size_t per = static_cast<std::size_t>(side) * side;
    nn::Tensor batch({static_cast<int>(end - begin), 1, side, side});
    labels.clear();
    std::bernoulli_distribution coin(0.5);
    for (std::size_t b = begin; b < end; ++b) {
        const float* src = data.pixels.data() + idx[b] * per;
        float* dst = batch.sample(static_cast<int>(b - begin));
        if (flip_rng != nullptr && coin(*flip_rng)) {
            for (int y = 0; y < side; ++y) {
                for (int x = 0; x < side; ++x) dst[y * side + x] = src[y * side + (side - 1 - x)];
            }
        } else {
            std::copy(src, src + per, dst);
        }
        labels.push_back(data.labels[idx[b]]);
    }
    return batch;
}

double accuracy(const nn::Network& net, const Batchable& data) {
    if (data.size() == 0) return 0.0;
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<int> labels;
    std::size_t correct = 0;
    constexpr std::size_t kEvalBatch = 64;
    for (std::size_t b = 0; b < data.size(); b += kEvalBatch) {
        const std::size_t e = std::min(data.size(), b + kEvalBatch);
        const nn::Tensor logits = net.logits(gather(data, idx, b, e, labels, nullptr));
        const int k = static_cast<int>(logits.shape().per_sample());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const float* row = logits.sample(static_cast<int>(i));
            const int pred = static_cast<int>(std::max_element(row, row + k) - row);
            correct += pred == labels[i] ? 1 : 0;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

nn::Network build_for(TrainTask task) {
    if (task == TrainTask::Attention) return nn::build_attention_cnn();
    return nn::build_mini_xception(task_classes(TrainTask::Emotion));
}

}  // namespace

std::vector<LabeledImage> list_dataset(const std::string& dataset_dir, TrainTask task) {
    const auto raw = scan(dataset_dir);
    const auto labels = label_map(raw, task);
    std::vector<LabeledImage> out;
    out.reserve(raw.size());
    for (const auto& r : raw) out.push_back({r.path, labels.at(r.folder)});
    return out;
}

DatasetSplits load_dataset(const std::string& dataset_dir, TrainTask task) {
    const auto raw = scan(dataset_dir);
    const auto labels = label_map(raw, task);
    DatasetSplits out;
    out.provided = !raw.front().split.empty();
    const fs::path root(dataset_dir);
    for (const auto& r : raw) {
        LabeledImage img{r.path, labels.at(r.folder)};
        int bucket = 0;
        if (out.provided) {
            bucket = r.split == "train" ? 0 : r.split == "val" ? 1 : 2;
        } else {
            bucket = split_bucket(fs::path(r.path).lexically_relative(root).generic_string());
        }
        (bucket == 0 ? out.train : bucket == 1 ? out.val : out.test).push_back(std::move(img));
    }
    if (out.train.empty()) throw DatasetError("training split is empty");
    if (out.val.empty()) throw DatasetError("validation split is empty");
    return out;
}

double TrainRun::best_val_acc() const {
    double best = 0.0;
    for (const auto& e : curve) best = std::max(best, e.val_acc);
    return best;
}

std::string curve_path_for(const std::string& model_path) {
    return fs::path(model_path).replace_extension(".curve.csv").string();
}

std::string curve_plot_path_for(const std::string& model_path) {
    return fs::path(model_path).replace_extension(".curve.png").string();
}

void write_curve_csv(const std::vector<EpochRecord>& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write curve: " + path);
    out << "epoch,train_acc,val_acc\n";
    out.precision(6);
    for (const auto& e : curve) out << e.epoch << ',' << e.train_acc << ',' << e.val_acc << '\n';
    if (!out) throw IoError("failed writing curve: " + path);
}

namespace {

void write_curve_plot(const std::vector<EpochRecord>& curve, TrainTask task, const std::string& path) {
    LinePlot plot;
    plot.title = std::string(to_string(task)) + " model accuracy by epoch";
    plot.x_label = "epoch";
    plot.y_label = "accuracy";
    plot.x_min = 1.0;
    plot.x_max = std::max(2.0, static_cast<double>(curve.size()));
    plot.y_min = 0.0;
    plot.y_max = 1.0;
    plot.y_ticks = {0.0, 0.25, 0.5, 0.75, 1.0};
    PlotLine train{"train", 0x1f77b4, {{}}};
    PlotLine val{"validation", 0xff7f0e, {{}}};
    for (const auto& e : curve) {
        train.segments[0].emplace_back(e.epoch, e.train_acc);
        val.segments[0].emplace_back(e.epoch, e.val_acc);
    }
    plot.lines = {train, val};
    write_line_plot(plot, path);
}

}  // namespace

TrainRun train_model(TrainTask task, const std::string& dataset_dir, const std::string& out_path,
                     const TrainOptions& options) {
    if (options.epochs < 1) throw DatasetError("epochs must be >= 1");
    if (options.batch_size < 1) throw DatasetError("batch size must be >= 1");
    if (!(options.learning_rate > 0.0)) throw DatasetError("learning rate must be positive");

    const auto splits = load_dataset(dataset_dir, task);
    const int side = task_input_side(task);
    const Batchable train = load_images(splits.train, side);
    const Batchable val = load_images(splits.val, side);
    const Batchable test = load_images(splits.test, side);

    nn::Network net = build_for(task);
    net.initialize(options.seed);
    nn::Adam adam(net.params(), {options.learning_rate, 0.9, 0.999, 1e-7});

    TrainRun run;
    run.task = task;
    run.dataset_dir = dataset_dir;
    run.model_path = out_path;
    run.curve_path = curve_path_for(out_path);

    const auto started = std::chrono::steady_clock::now();
    std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<int> labels;
    const auto batch = static_cast<std::size_t>(options.batch_size);
    for (int epoch = 1; epoch <= options.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t b = 0; b < order.size(); b += batch) {
            const std::size_t e = std::min(order.size(), b + batch);
            const nn::Tensor x = gather(train, order, b, e, labels, options.horizontal_flip ? &rng : nullptr);
            adam.zero_grad();
            const nn::Tensor logits = net.forward(x, true);
            nn::Tensor grad;
            loss_sum += nn::softmax_cross_entropy(logits, labels, grad);
            net.backward(grad);
            adam.step();
            ++steps;
        }
        EpochRecord rec{epoch, loss_sum / static_cast<double>(steps), accuracy(net, train), accuracy(net, val)};
        run.curve.push_back(rec);
        if (options.on_epoch) options.on_epoch(rec);
    }
    if (test.size() > 0) run.test_acc = accuracy(net, test);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    run.metadata = {{"optimizer", "adam"},
                    {"learning_rate", options.learning_rate},
                    {"batch_size", options.batch_size},
                    {"epochs", options.epochs},
                    {"seed", options.seed},
                    {"horizontal_flip", options.horizontal_flip},
                    {"dataset", dataset_dir},
                    {"split", splits.provided ? "provided" : "hash 80/10/10"},
                    {"train_images", train.size()},
                    {"val_images", val.size()},
                    {"test_images", test.size()},
                    {"final_train_acc", run.final_train_acc()},
                    {"best_val_acc", run.best_val_acc()},
                    {"train_seconds", seconds}};
    if (run.test_acc) run.metadata["test_acc"] = *run.test_acc;
    net.metadata() = run.metadata;

    const auto parent = fs::path(out_path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    net.save(out_path);
    write_curve_csv(run.curve, run.curve_path);
    if (options.write_plot) {
        run.plot_path = curve_plot_path_for(out_path);
        write_curve_plot(run.curve, task, run.plot_path);
    }
    return run;
}

double evaluate_model(const std::string& model_path, const std::string& dataset_dir) {
    const nn::Network net = nn::Network::load(model_path);
    const auto task = parse_train_task(net.task());
    if (!task) throw ModelLoadError("model task `" + net.task() + "` is not trainable here: " + model_path);
    if (net.input_side() != task_input_side(*task) || net.classes() != task_classes(*task)) {
        throw ModelLoadError("model classes or input size do not match its task: " + model_path);
    }
    const auto images = list_dataset(dataset_dir, *task);
    return accuracy(net, load_images(images, net.input_side()));
}

}  // namespace engage
