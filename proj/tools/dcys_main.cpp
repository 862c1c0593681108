// dcys: densely-connected CNN pipeline for pancreatic-cyst slice
// classification. Subcommands: synth, train, cv, predict, saliency.
//
// Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numerical abort.

#include <CLI11.hpp>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dcys/checkpoint.hpp"
#include "dcys/data.hpp"
#include "dcys/eval.hpp"
#include "dcys/model.hpp"
#include "dcys/saliency.hpp"
#include "dcys/synth.hpp"
#include "dcys/train.hpp"

namespace fs = std::filesystem;
using namespace dcys;

namespace {

struct SpecFlags {
    DenseNetSpec spec;
    std::string model = "densenet";
    bool initial_channels_set = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--model", model, "Architecture: densenet or cnn-baseline")
            ->check(CLI::IsMember({"densenet", "cnn-baseline"}))
            ->capture_default_str();
        cmd->add_option("--blocks", spec.num_blocks, "Number of dense blocks")->capture_default_str();
        cmd->add_option("--layers", spec.layers_per_block, "Layers L per block")->capture_default_str();
        cmd->add_option("--growth", spec.growth_rate, "Growth rate k")->capture_default_str();
        auto* k0 = cmd->add_option("--initial-channels", spec.initial_channels,
                                   "Stem output channels k0 (default 2*k)");
        k0->capture_default_str();
        cmd->parse_complete_callback([this, k0] {
            if (k0->count() == 0) spec.initial_channels = 2 * spec.growth_rate;
        });
        cmd->add_option("--bottleneck", spec.bottleneck_factor,
                        "Bottleneck width as a multiple of k")
            ->capture_default_str();
        cmd->add_option("--input-size", spec.input_size, "Square slice/network input size")
            ->capture_default_str();
        cmd->add_option("--compression", spec.transition_compression,
                        "Transition channel compression theta in (0,1]")
            ->capture_default_str();
        cmd->add_flag("--transition-max-pool", spec.transition_max_pool,
                      "Use max pooling in transitions (ablation; default average)");
    }

    LayerGraph build() const {
        return model == "densenet" ? build_densenet(spec) : build_baseline_cnn(spec);
    }
};

struct TrainFlags {
    TrainConfig cfg;
    AugmentParams aug;
    bool no_augment = false;
    std::vector<double> weights;

    void attach(CLI::App* cmd) {
        cmd->add_option("--batch", cfg.batch_size, "Mini-batch size")->capture_default_str();
        cmd->add_option("--lr", cfg.learning_rate, "SGD learning rate")->capture_default_str();
        cmd->add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
        cmd->add_option("--momentum", cfg.momentum, "SGD momentum (default off)")
            ->capture_default_str();
        cmd->add_option("--weight-decay", cfg.weight_decay, "L2 weight decay (default off)")
            ->capture_default_str();
        cmd->add_option("--class-weights", weights,
                        "Explicit per-class loss weights (default: auto inverse-frequency)")
            ->expected(4);
        cmd->add_flag("--no-augment", no_augment, "Disable online data augmentation");
        cmd->add_option("--rot-min", aug.rotation_min_deg, "Min augmentation rotation (deg)")
            ->capture_default_str();
        cmd->add_option("--rot-max", aug.rotation_max_deg, "Max augmentation rotation (deg)")
            ->capture_default_str();
        cmd->add_option("--zoom-min", aug.zoom_min, "Min augmentation zoom factor")
            ->capture_default_str();
        cmd->add_option("--zoom-max", aug.zoom_max, "Max augmentation zoom factor")
            ->capture_default_str();
        cmd->add_option("--flip-prob", aug.vertical_flip_prob, "Vertical flip probability")
            ->capture_default_str();
    }

    TrainConfig resolve(std::uint64_t seed) const {
        TrainConfig c = cfg;
        c.seed = seed;
        c.class_weights = weights;
        if (!no_augment) c.augment = aug;
        return c;
    }
};

int run_synth(const SynthConfig& cfg, const std::string& out_dir) {
    const auto volumes = synth_generate(cfg);
    fs::create_directories(out_dir);
    std::vector<ManifestRow> rows;
    std::array<int, kNumClasses> per_class{};
    for (const auto& v : volumes) {
        const std::string file = (fs::path(out_dir) / (v.patient_id + ".rvol")).string();
        write_volume(v, file);
        rows.push_back({v.patient_id, v.label, file});
        ++per_class[v.label];
    }
    write_manifest(rows, (fs::path(out_dir) / "manifest.csv").string());
    for (int c = 0; c < kNumClasses; ++c)
        std::printf("%s: %d volumes\n", kClassNames[c], per_class[c]);
    std::printf("wrote %zu volumes + manifest.csv to %s\n", volumes.size(), out_dir.c_str());
    return 0;
}

std::vector<SliceSample> slices_for_training(const std::vector<Volume>& volumes, int side,
                                             double threshold) {
    std::vector<SliceSample> out;
    for (const auto& v : volumes) {
        auto s = extract_slices(v, side, threshold);
        if (s.empty())
            std::fprintf(stderr, "warning: patient %s has no surviving slices\n",
                         v.patient_id.c_str());
        out.insert(out.end(), s.begin(), s.end());
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Densely-connected CNN engine for pancreatic cyst classification"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a key=value config file");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic phantom dataset");
    SynthConfig synth_cfg;
    std::string synth_out = "synth_data";
    synth->add_option("--out", synth_out, "Output directory")->capture_default_str();
    synth->add_option("--n-per-class", synth_cfg.n_per_class, "Volumes per class")
        ->capture_default_str();
    synth->add_option("--depth", synth_cfg.depth, "Volume depth (axial slices)")
        ->capture_default_str();
    synth->add_option("--height", synth_cfg.height, "Volume height")->capture_default_str();
    synth->add_option("--width", synth_cfg.width, "Volume width")->capture_default_str();
    synth->add_option("--seed", synth_cfg.seed, "RNG seed")->capture_default_str();

    // shared pipeline flags
    double threshold = 0.10;
    std::uint64_t seed = 1;

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset manifest");
    std::string train_manifest, train_ckpt = "model.dcys", train_csv = "train_log.csv";
    SpecFlags train_spec;
    TrainFlags train_flags;
    train_cmd->add_option("--manifest", train_manifest, "Dataset manifest CSV")->required();
    train_cmd->add_option("--out", train_ckpt, "Checkpoint output path")->capture_default_str();
    train_cmd->add_option("--loss-csv", train_csv, "Per-epoch loss/accuracy CSV")
        ->capture_default_str();
    train_cmd->add_option("--threshold", threshold, "Minimum slice overlap ratio")
        ->capture_default_str();
    train_cmd->add_option("--seed", seed, "RNG seed")->capture_default_str();
    train_spec.attach(train_cmd);
    train_flags.attach(train_cmd);

    // cv
    auto* cv_cmd = app.add_subcommand("cv", "Stratified k-fold cross-validation");
    std::string cv_manifest, cv_out = "cv_report.csv";
    int cv_k = 10;
    SpecFlags cv_spec;
    TrainFlags cv_flags;
    cv_cmd->add_option("--manifest", cv_manifest, "Dataset manifest CSV")->required();
    cv_cmd->add_option("--out", cv_out, "CV report CSV output path")->capture_default_str();
    cv_cmd->add_option("--k", cv_k, "Number of folds")->capture_default_str();
    cv_cmd->add_option("--threshold", threshold, "Minimum slice overlap ratio")
        ->capture_default_str();
    cv_cmd->add_option("--seed", seed, "RNG seed")->capture_default_str();
    cv_spec.attach(cv_cmd);
    cv_flags.attach(cv_cmd);

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "Patient-level prediction for one volume");
    std::string pr_ckpt, pr_volume, pr_id;
    predict_cmd->add_option("--checkpoint", pr_ckpt, "Model checkpoint")->required();
    predict_cmd->add_option("--volume", pr_volume, "RVOL volume file")->required();
    predict_cmd->add_option("--patient-id", pr_id, "Patient id (default: volume filename)");
    predict_cmd->add_option("--threshold", threshold, "Minimum slice overlap ratio")
        ->capture_default_str();

    // saliency
    auto* sal_cmd = app.add_subcommand("saliency", "Write guided-backprop saliency maps as PGM");
    std::string sal_ckpt, sal_volume, sal_outdir = "saliency_maps", sal_method = "guided";
    int sal_target = -1, sal_slice = -1;
    sal_cmd->add_option("--checkpoint", sal_ckpt, "Model checkpoint")->required();
    sal_cmd->add_option("--volume", sal_volume, "RVOL volume file")->required();
    sal_cmd->add_option("--out-dir", sal_outdir, "Output directory")->capture_default_str();
    sal_cmd->add_option("--target", sal_target,
                        "Target class index (default -1: the predicted class)")
        ->capture_default_str();
    sal_cmd->add_option("--slice", sal_slice, "Slice index (default -1: all surviving slices)")
        ->capture_default_str();
    sal_cmd->add_option("--method", sal_method, "guided or vanilla")
        ->check(CLI::IsMember({"guided", "vanilla"}))
        ->capture_default_str();
    sal_cmd->add_option("--threshold", threshold, "Minimum slice overlap ratio")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) return run_synth(synth_cfg, synth_out);

        if (train_cmd->parsed()) {
            const auto volumes = load_dataset(train_manifest);
            auto slices = slices_for_training(volumes, train_spec.spec.input_size, threshold);
            LayerGraph graph = train_spec.build();
            init_parameters(graph, seed);
            const TrainReport report =
                train(graph, slices, train_flags.resolve(seed), [](const EpochStats& e) {
                    std::printf("epoch %d loss %.4f acc %.3f\n", e.epoch, e.mean_loss,
                                e.slice_accuracy);
                });
            write_train_report_csv(report, train_csv);
            save_checkpoint(graph, train_spec.spec, train_ckpt);
            std::printf("checkpoint written to %s\n", train_ckpt.c_str());
            return 0;
        }

        if (cv_cmd->parsed()) {
            const auto volumes = load_dataset(cv_manifest);
            CVConfig cc;
            cc.k = cv_k;
            cc.seed = seed;
            cc.slice_side = cv_spec.spec.input_size;
            cc.overlap_threshold = threshold;
            cc.model = cv_spec.model;
            const CVReport report = run_cv(volumes, cv_spec.spec, cv_flags.resolve(seed), cc);
            std::ofstream os(cv_out);
            if (!os) throw DataError("cannot open report for writing: " + cv_out);
            os << cv_report_csv(report);
            std::printf("%s", cv_report_table(report).c_str());
            std::printf("report written to %s\n", cv_out.c_str());
            return 0;
        }

        if (predict_cmd->parsed()) {
            if (!fs::exists(pr_ckpt)) throw UsageError("checkpoint not found: " + pr_ckpt);
            DenseNetSpec spec;
            LayerGraph graph = load_checkpoint(pr_ckpt, &spec);
            Volume v = read_volume(pr_volume);
            v.patient_id = pr_id.empty() ? fs::path(pr_volume).stem().string() : pr_id;
            const auto slices = extract_slices(v, spec.input_size, threshold);
            const PatientPrediction p = predict_patient(graph, slices, v.patient_id);
            std::printf("%s,%.6f,%.6f,%.6f,%.6f,%s\n", p.patient_id.c_str(), p.probs[0], p.probs[1],
                        p.probs[2], p.probs[3], kClassNames[p.predicted]);
            return 0;
        }

        if (sal_cmd->parsed()) {
            if (!fs::exists(sal_ckpt)) throw UsageError("checkpoint not found: " + sal_ckpt);
            DenseNetSpec spec;
            LayerGraph graph = load_checkpoint(sal_ckpt, &spec);
            Volume v = read_volume(sal_volume);
            v.patient_id = fs::path(sal_volume).stem().string();
            const auto slices = extract_slices(v, spec.input_size, threshold);
            if (slices.empty())
                throw DataError("saliency: no surviving slices for patient " + v.patient_id);
            fs::create_directories(sal_outdir);
            for (int i = 0; i < static_cast<int>(slices.size()); ++i) {
                if (sal_slice >= 0 && i != sal_slice) continue;
                Tensor image({1, 1, spec.input_size, spec.input_size});
                std::copy(slices[i].image.begin(), slices[i].image.end(), image.data.begin());
                int target = sal_target;
                if (target < 0) {
                    const Tensor probs = graph_forward(graph, image, Mode::Eval);
                    target = 0;
                    for (int c = 1; c < graph.num_classes; ++c)
                        if (probs.at2(0, c) > probs.at2(0, target)) target = c;
                }
                SaliencyMap map = sal_method == "guided" ? guided_backprop(graph, image, target)
                                                         : vanilla_gradient(graph, image, target);
                map.patient_id = v.patient_id;
                map.slice_id = std::to_string(i);
                const std::string file =
                    (fs::path(sal_outdir) /
                     (v.patient_id + "_slice" + std::to_string(i) + "_class" +
                      std::to_string(target) + ".pgm"))
                        .string();
                write_map_pgm(map, file);
                std::printf("wrote %s\n", file.c_str());
            }
            return 0;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const ShapeError& e) {
        std::fprintf(stderr, "shape error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 3;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numerical abort: %s\n", e.what());
        return 4;
    }
    return 0;
}
