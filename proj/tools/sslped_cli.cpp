// Command line front end: synth, train-base, train-ssl, detect, eval, plot,
// experiment, config.

#include "sslped/errors.hpp"
#include "sslped/experiment.hpp"
#include "sslped/linear_svm.hpp"
#include "sslped/run_config.hpp"
#include "sslped/sequence_io.hpp"
#include "sslped/ssl_training.hpp"
#include "sslped/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace sslped;

namespace {

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;

    void attach(CLI::App* cmd)
    {
        cmd->add_option("-c,--config", config_path, "run configuration file");
        cmd->add_option("--set", overrides, "override, section.key=value (repeatable)");
    }

    [[nodiscard]] RunConfig load() const
    {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
        for (const auto& o : overrides) {
            apply_override(cfg, o);
        }
        cfg.validate();
        return cfg;
    }
};

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
}

ImageSequence load_nonempty(const fs::path& dir)
{
    auto seq = load_sequence(dir);
    if (seq.size() == 0) {
        throw DataError("sequence " + dir.string() + " has no frames");
    }
    return seq;
}

std::string lamr_line(double lamr)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "LAMR=%.4f", lamr);
    return buf;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Two-stage pedestrian detector with spatiotemporal stacked sequential learning"};
    app.require_subcommand(1);

    // synth
    Common synth_common;
    std::string synth_out;
    int synth_stride = 1;
    bool synth_split = false;
    auto* synth = app.add_subcommand("synth", "generate a synthetic sequence (or train/test split)");
    synth_common.attach(synth);
    synth->add_option("-o,--out", synth_out, "output directory")->required();
    synth->add_option("--frame-stride", synth_stride, "render every n-th simulated frame")->check(CLI::PositiveNumber);
    synth->add_flag("--split", synth_split, "write train/ and test/ using the [split] section");

    // train-base
    Common tb_common;
    std::string tb_data, tb_out = "base.sslmodel";
    auto* train_base = app.add_subcommand("train-base", "train the base classifier with bootstrapping");
    tb_common.attach(train_base);
    train_base->add_option("-d,--data", tb_data, "training sequence directory")->required();
    train_base->add_option("-o,--out", tb_out, "model file");

    // train-ssl
    Common ts_common;
    std::string ts_data, ts_out = ".";
    auto* train_ssl_cmd = app.add_subcommand("train-ssl", "train base and SSL classifiers");
    ts_common.attach(train_ssl_cmd);
    train_ssl_cmd->add_option("-d,--data", ts_data, "training sequence directory")->required();
    train_ssl_cmd->add_option("-o,--out-dir", ts_out, "directory for base.sslmodel and ssl.sslmodel");

    // detect
    Common det_common;
    std::string det_data, det_base, det_ssl, det_out = "detections.csv";
    bool det_baseline = false;
    auto* detect = app.add_subcommand("detect", "run the detector over a sequence");
    det_common.attach(detect);
    detect->add_option("-d,--data", det_data, "sequence directory")->required();
    detect->add_option("--base", det_base, "base model")->required();
    detect->add_option("--ssl", det_ssl, "SSL model");
    detect->add_flag("--baseline", det_baseline, "stage 1 + NMS only");
    detect->add_option("-o,--out", det_out, "detections CSV");

    // eval
    Common ev_common;
    std::string ev_data, ev_dets, ev_out = "curve.csv", ev_subset;
    auto* eval = app.add_subcommand("eval", "miss rate vs FPPI curve and log-average miss rate");
    ev_common.attach(eval);
    eval->add_option("-d,--data", ev_data, "sequence directory with annotations")->required();
    eval->add_option("--detections", ev_dets, "detections CSV")->required();
    eval->add_option("--subset", ev_subset, "near, medium or reasonable");
    eval->add_option("-o,--out", ev_out, "curve CSV");

    // plot
    Common pl_common;
    std::vector<std::string> pl_curves;
    std::string pl_out = "curves.svg";
    auto* plot = app.add_subcommand("plot", "SVG of one or more curves");
    pl_common.attach(plot);
    plot->add_option("curves", pl_curves, "name=curve.csv")->required();
    plot->add_option("-o,--out", pl_out, "SVG file");

    // experiment
    Common ex_common;
    int ex_stride = 1;
    std::vector<std::string> ex_variants;
    auto* experiment = app.add_subcommand("experiment", "train and evaluate the variant matrix on synthetic data");
    ex_common.attach(experiment);
    experiment->add_option("--frame-stride", ex_stride, "fps divisor")->check(CLI::PositiveNumber);
    experiment->add_option("--variants", ex_variants, "subset of base, ssl_proj, ssl_flow, base_hof, ssl_hof");

    // config
    Common cf_common;
    auto* config = app.add_subcommand("config", "print the effective configuration");
    cf_common.attach(config);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*synth) {
            const auto cfg = synth_common.load();
            if (synth_split) {
                const auto s = generate_split(cfg.synth, cfg.split.train_frames, cfg.split.gap_frames,
                                              cfg.split.test_frames, synth_stride);
                save_sequence(fs::path(synth_out) / "train", s.train);
                save_sequence(fs::path(synth_out) / "test", s.test);
            } else {
                save_sequence(synth_out, generate(cfg.synth, synth_stride));
            }
        } else if (*train_base) {
            const auto cfg = tb_common.load();
            const auto seq = load_nonempty(tb_data);
            const auto r = bootstrap_train(seq, {}, cfg.train.scan, cfg.train.svm, cfg.train.bootstrap);
            save_model(r.model, tb_out);
            std::cout << "positives=" << r.positives << " negatives=" << r.initial_negatives;
            for (std::size_t i = 1; i < r.mined_per_round.size(); ++i) {
                std::cout << " mined" << i << "=" << r.mined_per_round[i];
            }
            std::cout << "\n";
        } else if (*train_ssl_cmd) {
            const auto cfg = ts_common.load();
            const auto seq = load_nonempty(ts_data);
            const auto models = train_ssl(seq, cfg.training());
            fs::create_directories(ts_out);
            save_model(models.base, fs::path(ts_out) / "base.sslmodel");
            save_model(models.ssl, fs::path(ts_out) / "ssl.sslmodel");
            std::cout << "ssl_positives=" << models.ssl_positives << " ssl_negatives=" << models.ssl_negatives << "\n";
        } else if (*detect) {
            auto cfg = det_common.load();
            const auto seq = load_nonempty(det_data);
            const auto base = load_model(det_base);
            std::optional<LinearModel> ssl;
            if (!det_baseline) {
                if (det_ssl.empty()) {
                    throw UsageError("detect needs --ssl unless --baseline is given");
                }
                ssl = load_model(det_ssl);
            }
            cfg.train.scan.channels = base.channels;
            auto dc = cfg.train.detector;
            dc.ssl_disabled = det_baseline;
            DetectionStats stats;
            const auto dets = detect_sequence(seq, base, ssl ? &*ssl : nullptr, cfg.train.scan, dc, &stats);
            write_detections(det_out, dets);
            std::cout << "frames=" << stats.frames << " scored_windows=" << stats.scored_windows
                      << " stage1_candidates=" << stats.stage1_candidates << " detections=" << stats.final_detections
                      << "\n";
        } else if (*eval) {
            auto cfg = ev_common.load();
            if (!ev_subset.empty()) {
                cfg.eval.subset = parse_subset(ev_subset);
            }
            const auto seq = load_sequence(ev_data);
            const auto dets = read_detections(ev_dets);
            const auto r = evaluate(dets, seq.annotations, seq.size(), cfg.eval);
            write_curve_csv(ev_out, r.points);
            std::cout << lamr_line(r.lamr) << "\n";
        } else if (*plot) {
            const auto cfg = pl_common.load();
            std::vector<NamedCurve> curves;
            for (const auto& spec : pl_curves) {
                const auto eq = spec.find('=');
                if (eq == std::string::npos || eq == 0) {
                    throw UsageError("curve must be name=path: '" + spec + "'");
                }
                curves.push_back({spec.substr(0, eq), read_curve_csv(spec.substr(eq + 1))});
            }
            write_text(pl_out, render_svg(curves, cfg.eval));
        } else if (*experiment) {
            const auto cfg = ex_common.load();
            auto variants = standard_variants();
            if (!ex_variants.empty()) {
                std::vector<Variant> chosen;
                for (const auto& name : ex_variants) {
                    const auto it = std::find_if(variants.begin(), variants.end(),
                                                 [&](const Variant& v) { return v.name == name; });
                    if (it == variants.end()) {
                        throw UsageError("unknown variant '" + name + "'");
                    }
                    chosen.push_back(*it);
                }
                variants = chosen;
            }
            const auto r = run_experiment(cfg, variants, ex_stride);
            std::printf("seed=%llu fps=%g\n", static_cast<unsigned long long>(r.seed), r.fps);
            std::printf("%-10s %9s %9s %9s %12s %12s %8s\n", "variant", "near", "medium", "reasonable",
                        "scored", "stage1", "seconds");
            for (const auto& v : r.variants) {
                std::printf("%-10s %9.3f %9.3f %9.3f %12zu %12zu %8.1f\n", v.variant.name.c_str(),
                            v.lamr_of(Subset::near), v.lamr_of(Subset::medium), v.lamr_of(Subset::reasonable),
                            v.stats.scored_windows, v.stats.stage1_candidates, v.seconds);
            }
        } else if (*config) {
            std::cout << format_run_config(cf_common.load());
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
