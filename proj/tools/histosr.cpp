// Command-line front end: synthesize data, build paired datasets, train,
// predict, evaluate, and extract figure-style diagnostics.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "histosr/dataset.hpp"
#include "histosr/line_profile.hpp"
#include "histosr/predict.hpp"
#include "histosr/resample.hpp"
#include "histosr/residual.hpp"
#include "histosr/synth.hpp"
#include "histosr/trainer.hpp"
#include "histosr/weights_io.hpp"

namespace fs = std::filesystem;
using namespace histosr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

bool g_verbose = false;

void vlog(const std::string& key, const std::string& value) {
    if (g_verbose) std::cout << "  " << key << " = " << value << "\n";
}

std::string seq_name(const char* stem, int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%04d.png", stem, i);
    return buf;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

// ---------------------------------------------------------------- synth ----

struct SynthArgs {
    int count = 32;
    int width = 1024;
    int height = 1524;
    std::uint64_t seed = 42;
    std::string out_dir;
};

int cmd_synth(const SynthArgs& a) {
    ensure_dir(a.out_dir);
    vlog("count", std::to_string(a.count));
    vlog("size", std::to_string(a.width) + "x" + std::to_string(a.height));
    vlog("seed", std::to_string(a.seed));
    vlog("out-dir", a.out_dir);
    const auto images = synth_generate(a.count, a.width, a.height, a.seed);
    for (int i = 0; i < a.count; ++i) {
        write_png(images[static_cast<std::size_t>(i)],
                  (fs::path(a.out_dir) / seq_name("synth_", i)).string());
    }
    std::cout << "wrote " << a.count << " images to " << a.out_dir << "\n";
    return kExitOk;
}

// -------------------------------------------------------------- degrade ----

struct DegradeArgs {
    std::string input, out;
    int factor = 2;
};

int cmd_degrade(const DegradeArgs& a) {
    vlog("input", a.input);
    vlog("out", a.out);
    vlog("factor", std::to_string(a.factor));
    write_png(degrade(read_png(a.input), a.factor), a.out);
    std::cout << "wrote " << a.out << "\n";
    return kExitOk;
}

// -------------------------------------------------------- build-dataset ----

struct BuildDatasetArgs {
    std::string src_dir;
    int count = 1320;
    int patch = 512;
    int factor = 2;
    int n_train = 1000;
    int n_test = 320;
    std::uint64_t seed = 42;
    std::string out_dir;
};

int cmd_build_dataset(const BuildDatasetArgs& a) {
    if (a.count < a.n_train + a.n_test) {
        throw ConfigError("build-dataset: count " + std::to_string(a.count) +
                          " is less than train " + std::to_string(a.n_train) + " + test " +
                          std::to_string(a.n_test));
    }
    vlog("src-dir", a.src_dir);
    vlog("count", std::to_string(a.count));
    vlog("patch", std::to_string(a.patch));
    vlog("factor", std::to_string(a.factor));
    vlog("train/test", std::to_string(a.n_train) + "/" + std::to_string(a.n_test));
    vlog("seed", std::to_string(a.seed));
    vlog("out-dir", a.out_dir);

    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(a.src_dir)) {
        if (e.is_regular_file() && e.path().extension() == ".png") {
            files.push_back(e.path().string());
        }
    }
    if (files.empty()) throw ConfigError("build-dataset: no .png files in '" + a.src_dir + "'");
    std::sort(files.begin(), files.end());
    std::vector<ImageRGB8> sources;
    sources.reserve(files.size());
    for (const auto& f : files) sources.push_back(read_png(f));

    const auto patches = augment_patches(sources, a.count, a.patch, a.seed);
    Rng split_rng = Rng::for_stream(a.seed, 0x9001);
    const auto splits = split_assignments(patches.size(), a.n_train, a.n_test, split_rng);

    ensure_dir(a.out_dir);
    ensure_dir((fs::path(a.out_dir) / "lr").string());
    ensure_dir((fs::path(a.out_dir) / "hr").string());
    ensure_dir((fs::path(a.out_dir) / "residual").string());

    DatasetManifest m;
    m.degrade_factor = a.factor;
    m.patch = a.patch;
    m.seed = a.seed;
    int written = 0;
    for (std::size_t i = 0; i < patches.size(); ++i) {
        if (splits[i].empty()) continue;  // beyond train+test
        const ImageRGB8& hr = patches[i];
        const ImageRGB8 lr = degrade(hr, a.factor);
        const ImageRGB8 res = encode_residual(hr, lr);
        ManifestEntry e;
        e.hr = "hr/" + seq_name("sample_", written);
        e.lr = "lr/" + seq_name("sample_", written);
        e.residual = "residual/" + seq_name("sample_", written);
        e.split = splits[i];
        write_png(hr, (fs::path(a.out_dir) / e.hr).string());
        write_png(lr, (fs::path(a.out_dir) / e.lr).string());
        write_png(res, (fs::path(a.out_dir) / e.residual).string());
        m.samples.push_back(std::move(e));
        ++written;
    }
    const std::string manifest_path = (fs::path(a.out_dir) / "manifest.json").string();
    save_manifest(m, manifest_path);

    // Audit the artifacts we just wrote before reporting success.
    const DatasetManifest check = load_manifest(manifest_path);
    int audit_train = 0, audit_test = 0;
    for (std::size_t i = 0; i < check.samples.size(); ++i) {
        const PairedSample s = load_sample(check, i);
        if (encode_residual(s.hr, s.lr) != s.residual) {
            throw FormatError("build-dataset: audit failed, sample " + std::to_string(i) +
                                  " residual does not match encode(hr, lr)",
                              0);
        }
        if (check.samples[i].split == "train") ++audit_train;
        if (check.samples[i].split == "test") ++audit_test;
    }
    if (audit_train != a.n_train || audit_test != a.n_test) {
        throw FormatError("build-dataset: audit failed, split sizes " +
                              std::to_string(audit_train) + "/" + std::to_string(audit_test) +
                              " do not match requested " + std::to_string(a.n_train) + "/" +
                              std::to_string(a.n_test),
                          0);
    }
    std::cout << "wrote " << m.samples.size() << " samples (" << a.n_train << " train, "
              << a.n_test << " test) to " << a.out_dir << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- train ----

struct TrainArgs {
    std::string manifest;
    int levels = 4;
    int base_channels = 16;
    TrainConfig cfg;
    std::string out = "model.psrw";
    std::string metrics;       // default: <out stem>_metrics.csv
    std::string config_file;   // JSON defaults, overridden by explicit flags
};

int cmd_train(CLI::App* sub, TrainArgs& a) {
    // Precedence: explicit CLI flag > config file > built-in default.
    if (!a.config_file.empty()) {
        std::ifstream is(a.config_file);
        if (!is) throw IoError("cannot open config file '" + a.config_file + "'");
        nlohmann::json j;
        try {
            is >> j;
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("config '" + a.config_file + "': " + e.what(), 0);
        }
        auto apply_int = [&](const char* key, const char* flag, int& dst) {
            if (j.contains(key) && sub->count(flag) == 0) dst = j.at(key).get<int>();
        };
        auto apply_double = [&](const char* key, const char* flag, double& dst) {
            if (j.contains(key) && sub->count(flag) == 0) dst = j.at(key).get<double>();
        };
        apply_int("levels", "--levels", a.levels);
        apply_int("base_channels", "--base-channels", a.base_channels);
        apply_double("learning_rate", "--lr", a.cfg.learning_rate);
        apply_int("batch_size", "--batch", a.cfg.batch_size);
        apply_int("max_epochs", "--epochs", a.cfg.max_epochs);
        apply_int("patience", "--patience", a.cfg.patience);
        apply_double("min_delta", "--min-delta", a.cfg.min_delta);
        apply_int("eval_every", "--eval-every", a.cfg.eval_every);
        apply_int("checkpoint_every", "--checkpoint-every", a.cfg.checkpoint_every);
        if (j.contains("seed") && sub->count("--seed") == 0) {
            a.cfg.seed = j.at("seed").get<std::uint64_t>();
        }
    }
    if (a.metrics.empty()) {
        a.metrics = (fs::path(a.out).parent_path() / fs::path(a.out).stem()).string() +
                    "_metrics.csv";
    }
    // Short desk runs: patience can never exceed the epoch budget.
    a.cfg.patience = std::min(a.cfg.patience, a.cfg.max_epochs);
    vlog("manifest", a.manifest);
    vlog("levels", std::to_string(a.levels));
    vlog("base-channels", std::to_string(a.base_channels));
    vlog("lr", format_shortest(a.cfg.learning_rate));
    vlog("batch", std::to_string(a.cfg.batch_size));
    vlog("epochs", std::to_string(a.cfg.max_epochs));
    vlog("patience", std::to_string(a.cfg.patience));
    vlog("seed", std::to_string(a.cfg.seed));
    vlog("out", a.out);
    vlog("metrics", a.metrics);

    const DatasetManifest manifest = load_manifest(a.manifest);
    const auto train_ids = manifest.split_indices("train");
    if (train_ids.empty()) throw ConfigError("train: manifest has no train samples");
    const PairedSample first = load_sample(manifest, train_ids[0]);

    UNetConfig mc;
    mc.levels = a.levels;
    mc.base_channels = a.base_channels;
    mc.input_h = first.lr.height;
    mc.input_w = first.lr.width;
    mc.validate();

    ModelWeights model = build_unet(mc, Rng::mix64(a.cfg.seed));
    const std::string stem = (fs::path(a.out).parent_path() / fs::path(a.out).stem()).string();
    TrainResult r = train(a.cfg, std::move(model), manifest, a.metrics, stem);
    save_weights(r.weights, a.out);

    std::cout << "trained " << r.metrics.size() << " epochs"
              << (r.stopped_early ? " (early stop)" : "") << ", best loss "
              << format_shortest(r.best_loss) << " at epoch " << r.best_epoch << "\n";
    std::cout << "weights: " << a.out << "\nmetrics: " << a.metrics << "\n";
    return kExitOk;
}

// -------------------------------------------------------------- predict ----

struct PredictArgs {
    std::string weights, input, out_residual, out_reconstructed;
};

int cmd_predict(const PredictArgs& a) {
    vlog("weights", a.weights);
    vlog("input", a.input);
    const ModelWeights w = load_weights(a.weights);
    const ImageRGB8 lr = read_png(a.input);
    const ImageRGB8 residual = predict_residual(w, lr);
    const ImageRGB8 recon = decode_residual(lr, residual);
    write_png(residual, a.out_residual);
    write_png(recon, a.out_reconstructed);
    std::cout << "wrote " << a.out_residual << " and " << a.out_reconstructed << "\n";
    return kExitOk;
}

// ------------------------------------------------------------- evaluate ----

struct EvaluateArgs {
    std::string weights, manifest, split = "test", out_csv;
};

int cmd_evaluate(const EvaluateArgs& a) {
    vlog("weights", a.weights);
    vlog("manifest", a.manifest);
    vlog("split", a.split);
    const ModelWeights w = load_weights(a.weights);
    const DatasetManifest m = load_manifest(a.manifest);
    const EvalReport r = evaluate_rmse(w, m, a.split);
    std::cout << "split: " << a.split << "  images: " << r.images << "\n"
              << "rmse_reconstruction: " << format_shortest(r.rmse_reconstruction) << "\n"
              << "rmse_residual: " << format_shortest(r.rmse_residual) << "\n"
              << "baseline (all-127 predictor): " << format_shortest(r.baseline) << "\n"
              << "reference (paper-reported): 0.002 train / 0.003 test\n";
    if (!a.out_csv.empty()) {
        std::ofstream os(a.out_csv, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open '" + a.out_csv + "'");
        os << "split,images,rmse_reconstruction,rmse_residual,baseline\n"
           << a.split << ',' << r.images << ',' << format_shortest(r.rmse_reconstruction) << ','
           << format_shortest(r.rmse_residual) << ',' << format_shortest(r.baseline) << "\n";
    }
    return kExitOk;
}

// -------------------------------------------------------------- profile ----

struct ProfileArgs {
    std::string image_a, image_b, out_csv;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

int cmd_profile(const ProfileArgs& a) {
    vlog("image-a", a.image_a);
    vlog("image-b", a.image_b);
    vlog("segment", "(" + std::to_string(a.x0) + "," + std::to_string(a.y0) + ") -> (" +
                        std::to_string(a.x1) + "," + std::to_string(a.y1) + ")");
    const ImageRGB8 ia = read_png(a.image_a);
    const ImageRGB8 ib = read_png(a.image_b);
    const auto samples = line_profile(ia, ib, a.x0, a.y0, a.x1, a.y1);
    std::ofstream os(a.out_csv, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + a.out_csv + "'");
    os << "index,x,y,red_a,red_b\n";
    for (const auto& s : samples) {
        os << s.index << ',' << s.x << ',' << s.y << ',' << static_cast<int>(s.red_a) << ','
           << static_cast<int>(s.red_b) << '\n';
    }
    std::cout << "wrote " << samples.size() << " samples to " << a.out_csv << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Residual-learning resolution enhancement for histology-style RGB images"};
    app.require_subcommand(1);

    std::uint64_t global_seed = 42;
    app.add_flag("--verbose", g_verbose, "Print the resolved configuration");
    app.add_option("--seed", global_seed, "Default seed for subcommands that accept one");
    std::string global_config;
    app.add_option("--config", global_config, "JSON config file (train subcommand keys)");

    SynthArgs synth;
    auto* s_synth = app.add_subcommand("synth", "Generate synthetic histology-style images");
    s_synth->add_option("--count", synth.count);
    s_synth->add_option("--width", synth.width);
    s_synth->add_option("--height", synth.height);
    s_synth->add_option("--seed", synth.seed);
    s_synth->add_option("--out-dir", synth.out_dir)->required();

    DegradeArgs degrade_args;
    auto* s_degrade = app.add_subcommand("degrade", "Down/up-sample an image by cubic resampling");
    s_degrade->add_option("--input", degrade_args.input)->required();
    s_degrade->add_option("--out", degrade_args.out)->required();
    s_degrade->add_option("--factor", degrade_args.factor);

    BuildDatasetArgs bd;
    auto* s_bd = app.add_subcommand("build-dataset",
                                    "Crop/flip/degrade sources into paired training data");
    s_bd->add_option("--src-dir", bd.src_dir)->required();
    s_bd->add_option("--count", bd.count);
    s_bd->add_option("--patch", bd.patch);
    s_bd->add_option("--factor", bd.factor);
    s_bd->add_option("--train", bd.n_train);
    s_bd->add_option("--test", bd.n_test);
    s_bd->add_option("--seed", bd.seed);
    s_bd->add_option("--out-dir", bd.out_dir)->required();

    TrainArgs tr;
    auto* s_train = app.add_subcommand("train", "Train the residual-prediction network");
    s_train->add_option("--manifest", tr.manifest)->required();
    s_train->add_option("--levels", tr.levels);
    s_train->add_option("--base-channels", tr.base_channels);
    s_train->add_option("--lr", tr.cfg.learning_rate);
    s_train->add_option("--batch", tr.cfg.batch_size);
    s_train->add_option("--epochs", tr.cfg.max_epochs);
    s_train->add_option("--patience", tr.cfg.patience);
    s_train->add_option("--min-delta", tr.cfg.min_delta);
    s_train->add_option("--seed", tr.cfg.seed);
    s_train->add_option("--eval-every", tr.cfg.eval_every);
    s_train->add_option("--checkpoint-every", tr.cfg.checkpoint_every);
    s_train->add_flag("--timing", tr.cfg.record_timing,
                      "Record wall-clock seconds in the metrics CSV (off keeps runs byte-identical)");
    s_train->add_option("--out", tr.out);
    s_train->add_option("--metrics", tr.metrics);

    PredictArgs pr;
    auto* s_pred = app.add_subcommand("predict", "Predict a residual and reconstruct");
    s_pred->add_option("--weights", pr.weights)->required();
    s_pred->add_option("--input", pr.input)->required();
    s_pred->add_option("--out-residual", pr.out_residual)->required();
    s_pred->add_option("--out-reconstructed", pr.out_reconstructed)->required();

    EvaluateArgs ev;
    auto* s_eval = app.add_subcommand("evaluate", "Relative-MSE report for a manifest split");
    s_eval->add_option("--weights", ev.weights)->required();
    s_eval->add_option("--manifest", ev.manifest)->required();
    s_eval->add_option("--split", ev.split);
    s_eval->add_option("--out-csv", ev.out_csv);

    ProfileArgs pf;
    auto* s_prof = app.add_subcommand("profile", "Red-channel intensity profile along a segment");
    s_prof->add_option("--image-a", pf.image_a)->required();
    s_prof->add_option("--image-b", pf.image_b)->required();
    s_prof->add_option("--x0", pf.x0)->required();
    s_prof->add_option("--y0", pf.y0)->required();
    s_prof->add_option("--x1", pf.x1)->required();
    s_prof->add_option("--y1", pf.y1)->required();
    s_prof->add_option("--out-csv", pf.out_csv)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        // Global --seed fills in where a subcommand seed was not given.
        if (app.count("--seed") > 0) {
            if (s_synth->parsed() && s_synth->count("--seed") == 0) synth.seed = global_seed;
            if (s_bd->parsed() && s_bd->count("--seed") == 0) bd.seed = global_seed;
            if (s_train->parsed() && s_train->count("--seed") == 0) tr.cfg.seed = global_seed;
        }
        if (g_verbose) std::cout << "resolved configuration:\n";
        if (s_synth->parsed()) return cmd_synth(synth);
        if (s_degrade->parsed()) return cmd_degrade(degrade_args);
        if (s_bd->parsed()) return cmd_build_dataset(bd);
        if (s_train->parsed()) {
            tr.config_file = global_config;
            return cmd_train(s_train, tr);
        }
        if (s_pred->parsed()) return cmd_predict(pr);
        if (s_eval->parsed()) return cmd_evaluate(ev);
        if (s_prof->parsed()) return cmd_profile(pf);
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
