#include "sslped/experiment.hpp"

#include "sslped/errors.hpp"

#include <chrono>
#include <optional>

namespace sslped {

std::vector<Variant> standard_variants()
{
    return {
        {"base", false, VolumeMode::projection, false},
        {"ssl_proj", true, VolumeMode::projection, false},
        {"ssl_flow", true, VolumeMode::optical_flow, false},
        {"base_hof", false, VolumeMode::projection, true},
        {"ssl_hof", true, VolumeMode::projection, true},
    };
}

const VariantResult& ExperimentResult::find(const std::string& name) const
{
    for (const auto& v : variants) {
        if (v.variant.name == name) {
            return v;
        }
    }
    throw UsageError("no variant named '" + name + "'");
}

ExperimentResult run_experiment(const RunConfig& cfg, const std::vector<Variant>& variants, int frame_stride)
{
    cfg.validate();
    using Clock = std::chrono::steady_clock;
    const auto split = generate_split(cfg.synth, cfg.split.train_frames, cfg.split.gap_frames,
                                      cfg.split.test_frames, frame_stride);
    ExperimentResult out;
    out.fps = split.train.fps;
    out.seed = cfg.synth.seed;

    std::optional<std::vector<FlowField>> train_flows;
    const auto flows_for = [&]() -> const std::vector<FlowField>* {
        if (!train_flows) {
            train_flows = compute_sequence_flows(split.train, cfg.train.scan.flow_block, cfg.train.scan.flow_radius);
        }
        return &*train_flows;
    };

    for (const bool hof : {false, true}) {
        std::optional<LinearModel> base;
        double base_seconds = 0.0;
        for (const auto& v : variants) {
            if (v.flow_hist != hof) {
                continue;
            }
            SslTrainConfig tc = cfg.training();
            tc.scan.channels.flow_hist = hof;
            tc.neighborhood.mode = v.mode;
            const bool need_flow = hof || (v.ssl && v.mode == VolumeMode::optical_flow);
            const auto* flows = need_flow ? flows_for() : nullptr;

            const auto t0 = Clock::now();
            if (!base) {
                base = bootstrap_train(split.train, {}, tc.scan, tc.svm, tc.bootstrap, flows).model;
                base_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
            }
            std::optional<LinearModel> ssl;
            if (v.ssl) {
                const auto plan = make_fold_plan(split.train, tc.K);
                std::vector<LinearModel> fold_models;
                if (plan.K == 1) {
                    fold_models.push_back(*base);
                } else {
                    for (int k = 0; k < plan.K; ++k) {
                        fold_models.push_back(
                            bootstrap_train(split.train, plan.frames_outside(k), tc.scan, tc.svm, tc.bootstrap, flows)
                                .model);
                    }
                }
                ssl = train_ssl_classifier(split.train, tc, plan, fold_models, flows);
            }
            VariantResult r;
            r.variant = v;
            DetectorConfig dc = tc.detector;
            dc.ssl_disabled = !v.ssl;
            const auto dets = detect_sequence(split.test, *base, ssl ? &*ssl : nullptr, tc.scan, dc, &r.stats);
            for (const auto subset : {Subset::near, Subset::medium, Subset::reasonable}) {
                EvalConfig ec = cfg.eval;
                ec.subset = subset;
                r.lamr[static_cast<std::size_t>(subset)] =
                    evaluate(dets, split.test.annotations, static_cast<int>(split.test.size()), ec).lamr;
            }
            r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
            if (v.ssl) {
                r.seconds += base_seconds;
            }
            out.variants.push_back(std::move(r));
        }
    }
    return out;
}

}  // namespace sslped
