#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace engage {

enum class TrainTask { Emotion, Attention };

std::optional<TrainTask> parse_train_task(std::string_view name);
std::string_view to_string(TrainTask task);

/// Input side and class names of the network trained for `task`.
int task_input_side(TrainTask task);
std::vector<std::string> task_classes(TrainTask task);

struct LabeledImage {
    std::string path;
    int label = 0;  // index into task_classes
};

struct DatasetSplits {
    std::vector<LabeledImage> train;
    std::vector<LabeledImage> val;
    std::vector<LabeledImage> test;
    bool provided = false;  // train/val/test folders were supplied
};

/// FNV-1a 64-bit.
std::uint64_t fnv1a(std::string_view text);

/// 0 train, 1 validation, 2 test: an 80/10/10 split on the hash of `name`.
int split_bucket(std::string_view name);

/// Emotion folders are named after emotions (aliases accepted); attention sets
/// have a `focused` folder and one other folder for the distracted class.
/// Either `<dir>/<label>/*` (hash split) or `<dir>/{train,val[,test]}/<label>/*`.
/// Throws DatasetError on a missing or empty dataset, unknown labels or a single class.
DatasetSplits load_dataset(const std::string& dataset_dir, TrainTask task);

/// Every image below `dataset_dir`, split folders included.
std::vector<LabeledImage> list_dataset(const std::string& dataset_dir, TrainTask task);

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
};

struct TrainOptions {
    int epochs = 0;
    int batch_size = 64;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
    bool horizontal_flip = false;
    /// Writes `<out>.curve.png` next to the curve CSV.
    bool write_plot = true;
    std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainRun {
    TrainTask task = TrainTask::Emotion;
    std::string dataset_dir;
    std::vector<EpochRecord> curve;  // one entry per completed epoch
    std::optional<double> test_acc;
    std::string model_path;
    std::string curve_path;
    std::string plot_path;
    nlohmann::json metadata;

    double best_val_acc() const;
    double final_train_acc() const { return curve.empty() ? 0.0 : curve.back().train_acc; }
};

/// Trains the task's network and writes the model to `out_path`, the curve to
/// `<stem>.curve.csv` (`epoch,train_acc,val_acc`) and optionally a plot.
/// Throws DatasetError (including epochs < 1) and IoError.
TrainRun train_model(TrainTask task, const std::string& dataset_dir, const std::string& out_path,
                     const TrainOptions& options);

inline TrainRun train_emotion_model(const std::string& dataset_dir, const std::string& out_path,
                                    const TrainOptions& options) {
    return train_model(TrainTask::Emotion, dataset_dir, out_path, options);
}

inline TrainRun train_attention_model(const std::string& dataset_dir, const std::string& out_path,
                                      const TrainOptions& options) {
    return train_model(TrainTask::Attention, dataset_dir, out_path, options);
}

/// Fraction of images below `dataset_dir` the model classifies correctly.
/// Throws ModelLoadError and DatasetError.
double evaluate_model(const std::string& model_path, const std::string& dataset_dir);

std::string curve_path_for(const std::string& model_path);
std::string curve_plot_path_for(const std::string& model_path);

void write_curve_csv(const std::vector<EpochRecord>& curve, const std::string& path);

}  // namespace engage
