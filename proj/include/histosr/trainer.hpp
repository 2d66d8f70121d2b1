#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "histosr/dataset.hpp"
#include "histosr/unet.hpp"

namespace histosr {

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 2;
    int max_epochs = 900;
    int patience = 100;      // epochs without loss improvement before stopping
    double min_delta = 0.0;  // improvement below this counts as stagnation
    std::uint64_t seed = 42;
    bool shuffle = true;
    int eval_every = 10;        // rMSE cadence in epochs; 0 = only at the end
    int checkpoint_every = 50;  // 0 = no periodic checkpoints
    bool record_timing = false; // wall-clock column stays 0 unless enabled

    void validate() const {
        if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
        if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
        if (patience < 1 || patience > max_epochs) {
            throw ConfigError("train: patience must be in [1, max_epochs]");
        }
        if (!(learning_rate >= 0.0)) throw ConfigError("train: learning rate must be >= 0");
        if (min_delta < 0.0) throw ConfigError("train: min_delta must be >= 0");
    }
};

struct MetricsRecord {
    int epoch = 0;
    double loss = 0.0;
    double rmse_train = std::numeric_limits<double>::quiet_NaN();  // NaN = not evaluated
    double rmse_test = std::numeric_limits<double>::quiet_NaN();
    double seconds = 0.0;
};

// True iff no epoch among the last `patience` improved the running best loss
// by more than min_delta.
bool early_stop_check(std::span<const double> epoch_losses, int patience, double min_delta);

struct TrainResult {
    ModelWeights weights;  // from the best-loss epoch
    std::vector<MetricsRecord> metrics;
    int best_epoch = 0;
    double best_loss = 0.0;
    bool stopped_early = false;
};

// The full loop: per epoch a seeded shuffle, batches of batch_size (short
// final batch kept), forward -> BCE against the normalized residual target ->
// backward -> Adam. Metrics stream to `metrics_csv_path` as they happen (one
// row per epoch), so an abort preserves the rows so far. Checkpoints go to
// <checkpoint_stem>_epochNNNN.psrw and <checkpoint_stem>_best.psrw when a stem
// is given.
TrainResult train(const TrainConfig& cfg, ModelWeights model, const DatasetManifest& manifest,
                  const std::string& metrics_csv_path = "",
                  const std::string& checkpoint_stem = "");

struct EvalReport {
    double rmse_reconstruction = 0.0;  // decode(lr, predicted residual) vs hr
    double rmse_residual = 0.0;        // predicted residual vs true residual
    double baseline = 0.0;             // lr vs hr, i.e. the all-127 predictor
    int images = 0;
};

// Relative MSE over a split: sum of squared error / sum of squared truth,
// on [0,1]-normalized images, with the prediction quantized to bytes first.
EvalReport evaluate_rmse(const ModelWeights& w, const DatasetManifest& manifest,
                         const std::string& split);

// Metrics CSV: fixed header, shortest round-trip number formatting, empty
// cells for epochs where rMSE was not evaluated.
extern const char* const kMetricsHeader;  // "epoch,loss,rmse_train,rmse_test,seconds"
void write_metrics_row(std::ostream& os, const MetricsRecord& r);
std::string format_shortest(double v);

}  // namespace histosr
