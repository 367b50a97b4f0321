#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "matnet/dataset.hpp"
#include "matnet/errors.hpp"
#include "matnet/network.hpp"

namespace matnet {

struct LossConfig {
    double eta = 1.0; // activation regularization strength
    double xi = 1.0;  // target activation sum
};

struct TrainConfig {
    int epochs = 10000;
    int batch_size = 40;
    double initial_lr = 1e-2;
    double lr_factor = 0.8;
    int patience = 50;
    std::uint64_t seed = 0;
    double validation_fraction = 0.2;
    int threads = 0; // 0 = all logical cores
};

/// Mini-batch objective:
///   (1/2N) sum_j |C_j - Chat_j|_F^2 / |C_j|_F^2 + eta (sum ReLU(z) - xi)^2.
/// Throws ConfigError on an empty batch or a zero-norm target.
double loss(const Model& model, std::span<const TrainingSample> batch, const LossConfig& cfg);

/// Exact reverse-mode gradient of loss() with respect to the packed
/// parameter vector. The ReLU subgradient at z = 0 is taken as zero.
Eigen::VectorXd grad_loss(const Model& model, std::span<const TrainingSample> batch,
                          const LossConfig& cfg, int threads = 1);

/// (1/N) sum_j sqrt(|C_j - Chat_j|^2 / |C_j|^2).
double mean_relative_error(const Model& model, std::span<const TrainingSample> samples);

/// Packed parameter layout: activations first, then per-node Euler angle
/// triplets in heap order, or theta then phi blocks for the rotation-free
/// variant.
Eigen::VectorXd pack_params(const Model& model);
void unpack_params(Model& model, const Eigen::VectorXd& packed);

struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState zero(Eigen::Index n) {
        return AdamState{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), 0, 0.9, 0.999, 1e-8};
    }
};

/// Bias-corrected Adam update, in place.
void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);

/// Reduce-on-plateau schedule: multiply the rate by `factor` once the
/// monitored value has gone `patience` consecutive observations without a
/// strict improvement.
class PlateauScheduler {
public:
    PlateauScheduler(double lr, double factor, int patience)
        : lr_(lr), factor_(factor), patience_(patience) {}

    double rate() const { return lr_; }

    void observe(double value) {
        if (value < best_) {
            best_ = value;
            bad_epochs_ = 0;
            return;
        }
        if (++bad_epochs_ >= patience_) {
            lr_ *= factor_;
            bad_epochs_ = 0;
        }
    }

private:
    double lr_;
    double factor_;
    int patience_;
    double best_ = std::numeric_limits<double>::infinity();
    int bad_epochs_ = 0;
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> e_c_val;   // validation-split relative error (persisted as e_C)
    std::vector<double> e_c_train; // training-split estimate from the epoch's batches
    std::vector<double> lr;
};

struct TrainResult {
    Model best;  // lowest validation loss
    Model final; // last epoch
    TrainHistory history;
    int best_epoch = 0;
    double initial_e_c_val = 0.0; // validation error at initialization
};

/// Offline training: seeded initialization, shuffled mini-batches, Adam with
/// a reduce-on-plateau schedule driven by the validation loss. The dataset
/// tail (validation_fraction of it) is held out for validation. Throws
/// TrainingError when the loss turns non-finite.
TrainResult train(ModelType type, const Topology& topo, const Dataset& dataset,
                  const TrainConfig& cfg, const LossConfig& loss_cfg);

/// Combined batch evaluation used by train(); grad is filled only when
/// with_grad is set. Exposed for reuse by the benchmark harness.
struct BatchEval {
    double data_loss = 0.0;
    double reg_loss = 0.0;
    double mean_rel_error = 0.0;
    Eigen::VectorXd grad;

    double total() const { return data_loss + reg_loss; }
};
BatchEval evaluate_batch(const Model& model, std::span<const TrainingSample> batch,
                         const LossConfig& cfg, bool with_grad, int threads);

class TrainingError : public Error {
public:
    TrainingError(const std::string& msg, int epoch)
        : Error(msg + " at epoch " + std::to_string(epoch)), epoch(epoch) {}
    int epoch;
};

} // namespace matnet
