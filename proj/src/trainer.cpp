#include "histosr/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "histosr/adam.hpp"
#include "histosr/predict.hpp"
#include "histosr/weights_io.hpp"
#include "histosr/residual.hpp"

namespace histosr {

const char* const kMetricsHeader = "epoch,loss,rmse_train,rmse_test,seconds";

std::string format_shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_metrics_row(std::ostream& os, const MetricsRecord& r) {
    os << r.epoch << ',' << format_shortest(r.loss) << ',';
    if (!std::isnan(r.rmse_train)) os << format_shortest(r.rmse_train);
    os << ',';
    if (!std::isnan(r.rmse_test)) os << format_shortest(r.rmse_test);
    os << ',' << format_shortest(r.seconds) << '\n';
}

bool early_stop_check(std::span<const double> epoch_losses, int patience, double min_delta) {
    if (epoch_losses.empty()) return false;
    // Index of the last epoch that improved the running best by > min_delta.
    std::size_t last_improvement = 0;
    double best = epoch_losses[0];
    for (std::size_t i = 1; i < epoch_losses.size(); ++i) {
        if (epoch_losses[i] < best - min_delta) {
            best = epoch_losses[i];
            last_improvement = i;
        } else {
            best = std::min(best, epoch_losses[i]);
        }
    }
    const std::size_t stagnant = epoch_losses.size() - 1 - last_improvement;
    return stagnant >= static_cast<std::size_t>(patience);
}

namespace {

// Decoded training pairs; keeps everything in memory when it fits, otherwise
// re-decodes from disk per access.
class SampleStore {
  public:
    SampleStore(const DatasetManifest& manifest, std::vector<std::size_t> indices)
        : manifest_(manifest), indices_(std::move(indices)) {
        if (indices_.empty()) return;
        const PairedSample first = load_sample(manifest_, indices_[0]);
        h_ = first.lr.height;
        w_ = first.lr.width;
        const std::size_t per_sample = static_cast<std::size_t>(h_) * w_ * 3 * sizeof(float) * 2;
        cache_all_ = per_sample * indices_.size() <= kCacheBudget;
        if (cache_all_) {
            cache_.reserve(indices_.size());
            cache_.push_back({to_tensor(first.lr), to_tensor(first.residual)});
            for (std::size_t i = 1; i < indices_.size(); ++i) {
                const PairedSample s = load_sample(manifest_, indices_[i]);
                check_dims(s, i);
                cache_.push_back({to_tensor(s.lr), to_tensor(s.residual)});
            }
        }
    }

    std::size_t size() const { return indices_.size(); }
    int height() const { return h_; }
    int width() const { return w_; }

    // Input (lr) and target (residual) tensors for local sample i.
    std::pair<Tensor, Tensor> get(std::size_t i) const {
        if (cache_all_) return cache_[i];
        const PairedSample s = load_sample(manifest_, indices_[i]);
        check_dims(s, i);
        return {to_tensor(s.lr), to_tensor(s.residual)};
    }

  private:
    static constexpr std::size_t kCacheBudget = 2ull << 30;

    void check_dims(const PairedSample& s, std::size_t i) const {
        if (s.lr.height != h_ || s.lr.width != w_) {
            throw ConfigError("train: sample " + std::to_string(indices_[i]) + " is " +
                              s.lr.size_str() + " but the first sample was " +
                              std::to_string(w_) + "x" + std::to_string(h_));
        }
    }

    const DatasetManifest& manifest_;
    std::vector<std::size_t> indices_;
    int h_ = 0, w_ = 0;
    bool cache_all_ = false;
    std::vector<std::pair<Tensor, Tensor>> cache_;
};

Tensor stack_batch(const SampleStore& store, std::span<const std::size_t> ids, bool target) {
    const auto first = store.get(ids[0]);
    const Tensor& proto = target ? first.second : first.first;
    Tensor batch(static_cast<int>(ids.size()), proto.h, proto.w, proto.c);
    const std::size_t stride = proto.size();
    for (std::size_t b = 0; b < ids.size(); ++b) {
        const auto s = store.get(ids[b]);
        const Tensor& src = target ? s.second : s.first;
        std::copy(src.data.begin(), src.data.end(), batch.data.begin() + b * stride);
    }
    return batch;
}

struct AdamBundle {
    std::vector<AdamSlot> weight_slots, bias_slots;
    std::int64_t t = 0;
};

AdamBundle make_adam_state(const ModelWeights& w) {
    AdamBundle s;
    w.for_each_layer([&](const std::string&, const ConvKernel& k) {
        s.weight_slots.emplace_back(k.weights.size());
        s.bias_slots.emplace_back(k.bias.size());
    });
    return s;
}

void apply_adam(ModelWeights& w, const ModelWeights& grads, AdamBundle& state,
                const AdamConfig& cfg) {
    state.t += 1;
    std::vector<ConvKernel*> weight_layers;
    std::vector<const ConvKernel*> grad_layers;
    w.for_each_layer([&](const std::string&, ConvKernel& k) { weight_layers.push_back(&k); });
    grads.for_each_layer([&](const std::string&, const ConvKernel& k) { grad_layers.push_back(&k); });
    for (std::size_t li = 0; li < weight_layers.size(); ++li) {
        adam_step<float>(weight_layers[li]->weights, grad_layers[li]->weights,
                         state.weight_slots[li], state.t, cfg);
        adam_step<float>(weight_layers[li]->bias, grad_layers[li]->bias, state.bias_slots[li],
                         state.t, cfg);
    }
}

std::string checkpoint_path(const std::string& stem, int epoch) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", epoch);
    return stem + "_epoch" + buf + ".psrw";
}

}  // namespace

TrainResult train(const TrainConfig& cfg, ModelWeights model, const DatasetManifest& manifest,
                  const std::string& metrics_csv_path, const std::string& checkpoint_stem) {
    cfg.validate();
    model.config.validate();

    auto train_ids = manifest.split_indices("train");
    if (train_ids.empty()) throw ConfigError("train: manifest has no train split");
    SampleStore store(manifest, train_ids);
    const int div = model.config.divisor();
    if (store.height() % div != 0 || store.width() % div != 0) {
        throw ConfigError("train: samples are " + std::to_string(store.width()) + "x" +
                          std::to_string(store.height()) + ", not divisible by " +
                          std::to_string(div));
    }

    std::ofstream csv;
    if (!metrics_csv_path.empty()) {
        csv.open(metrics_csv_path, std::ios::binary | std::ios::trunc);
        if (!csv) throw IoError("cannot open metrics CSV '" + metrics_csv_path + "'");
        csv << kMetricsHeader << '\n';
        csv.flush();
    }

    Rng shuffle_rng = Rng::for_stream(cfg.seed, 1);  // stream 0 is the builder's
    AdamBundle adam = make_adam_state(model);
    AdamConfig adam_cfg;
    adam_cfg.learning_rate = cfg.learning_rate;

    TrainResult result;
    result.best_loss = std::numeric_limits<double>::infinity();
    ModelWeights best = model;
    std::vector<double> loss_history;
    std::vector<std::size_t> order(store.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    const auto t_start = std::chrono::steady_clock::now();
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        if (cfg.shuffle) {
            for (std::size_t i = order.size(); i > 1; --i) {
                const std::size_t j = static_cast<std::size_t>(shuffle_rng.uniform_below(i));
                std::swap(order[i - 1], order[j]);
            }
        }

        double loss_sum = 0.0;
        std::size_t seen = 0;
        int batch_index = 0;
        for (std::size_t off = 0; off < order.size(); off += cfg.batch_size, ++batch_index) {
            const std::size_t count = std::min<std::size_t>(cfg.batch_size, order.size() - off);
            const std::span<const std::size_t> ids(order.data() + off, count);
            Tensor input = stack_batch(store, ids, false);
            Tensor target = stack_batch(store, ids, true);

            UNetCache cache;
            Tensor pred = unet_forward(model, input, &cache);
            BceResultT<float> bce = bce_loss(pred, target);
            if (!std::isfinite(bce.loss)) {
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   " batch " + std::to_string(batch_index));
            }
            loss_sum += bce.loss * static_cast<double>(count);
            seen += count;

            if (cfg.learning_rate > 0.0) {
                ModelWeights grads = unet_backward(model, cache, bce.d_pred);
                apply_adam(model, grads, adam, adam_cfg);
            }
        }

        const double epoch_loss = loss_sum / static_cast<double>(seen);
        loss_history.push_back(epoch_loss);

        MetricsRecord rec;
        rec.epoch = epoch;
        rec.loss = epoch_loss;
        if (cfg.record_timing) {
            rec.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        }

        const bool improved = epoch_loss < result.best_loss;
        if (improved) {
            result.best_loss = epoch_loss;
            result.best_epoch = epoch;
            best = model;
            if (!checkpoint_stem.empty()) save_weights(best, checkpoint_stem + "_best.psrw");
        }
        if (!checkpoint_stem.empty() && cfg.checkpoint_every > 0 &&
            epoch % cfg.checkpoint_every == 0) {
            save_weights(model, checkpoint_path(checkpoint_stem, epoch));
        }

        const bool stop = early_stop_check(loss_history, cfg.patience, cfg.min_delta);
        const bool last = stop || epoch == cfg.max_epochs;
        if ((cfg.eval_every > 0 && epoch % cfg.eval_every == 0) || last) {
            rec.rmse_train = evaluate_rmse(model, manifest, "train").rmse_reconstruction;
            if (!manifest.split_indices("test").empty()) {
                rec.rmse_test = evaluate_rmse(model, manifest, "test").rmse_reconstruction;
            }
        }

        result.metrics.push_back(rec);
        if (csv.is_open()) {
            write_metrics_row(csv, rec);
            csv.flush();
            if (!csv) throw IoError("failed writing metrics CSV '" + metrics_csv_path + "'");
        }

        if (stop) {
            result.stopped_early = true;
            break;
        }
    }

    result.weights = std::move(best);
    return result;
}

EvalReport evaluate_rmse(const ModelWeights& w, const DatasetManifest& manifest,
                         const std::string& split) {
    const auto ids = manifest.split_indices(split);
    if (ids.empty()) throw ConfigError("evaluate: split '" + split + "' is empty");

    double num_recon = 0.0, num_resid = 0.0, num_base = 0.0;
    double den_hr = 0.0, den_resid = 0.0;
    for (std::size_t idx : ids) {
        const PairedSample s = load_sample(manifest, idx);
        const ImageRGB8 pred = predict_residual(w, s.lr);
        const ImageRGB8 recon = decode_residual(s.lr, pred);
        for (std::size_t i = 0; i < s.hr.pixels.size(); ++i) {
            const double hr = s.hr.pixels[i] / 255.0;
            const double lr = s.lr.pixels[i] / 255.0;
            const double rc = recon.pixels[i] / 255.0;
            const double rt = s.residual.pixels[i] / 255.0;
            const double rp = pred.pixels[i] / 255.0;
            num_recon += (rc - hr) * (rc - hr);
            num_base += (lr - hr) * (lr - hr);
            den_hr += hr * hr;
            num_resid += (rp - rt) * (rp - rt);
            den_resid += rt * rt;
        }
    }
    EvalReport r;
    r.images = static_cast<int>(ids.size());
    r.rmse_reconstruction = num_recon / den_hr;
    r.rmse_residual = num_resid / den_resid;
    r.baseline = num_base / den_hr;
    return r;
}

}  // namespace histosr
