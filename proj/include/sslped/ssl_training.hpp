#pragma once

#include "sslped/detector.hpp"
#include "sslped/linear_svm.hpp"
#include "sslped/ssl_core.hpp"

namespace sslped {

struct SslTrainConfig {
    ScanConfig scan;
    SvmConfig svm;                 // C_B and C_Bk
    SvmConfig ssl_svm{3e-3};       // C_SSL; neighbor scores widen the feature range
    BootstrapConfig bootstrap;     // base (C_B, C_Bk) training
    BootstrapConfig ssl_bootstrap; // C_SSL training
    NeighborhoodSpec neighborhood;
    DetectorConfig detector;       // stage-1 threshold and out-of-grid fill
    int K = 1;
};

struct SslModels {
    LinearModel base;
    LinearModel ssl;
    std::vector<LinearModel> fold_models;  // C_Bk; with K = 1 the single entry equals base
    std::size_t ssl_positives = 0;
    std::size_t ssl_negatives = 0;
};

/// Two-stage training: auxiliary classifiers per fold, cached fold score
/// maps, augmented samples, bootstrapped C_SSL, and C_B on all frames.
SslModels train_ssl(const ImageSequence& seq, const SslTrainConfig& cfg);

/// SSL training on top of already trained auxiliary classifiers
/// (fold_models[k] scores fold k).
LinearModel train_ssl_classifier(const ImageSequence& seq, const SslTrainConfig& cfg,
                                 const FoldPlan& plan, const std::vector<LinearModel>& fold_models,
                                 const std::vector<FlowField>* flows, std::size_t* positives = nullptr,
                                 std::size_t* negatives = nullptr);

}  // namespace sslped
