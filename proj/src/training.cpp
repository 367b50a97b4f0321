#include "matnet/training.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "matnet/rng.hpp"

namespace matnet {

void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
    if (state.m.size() != params.size()) {
        state.m = Eigen::VectorXd::Zero(params.size());
        state.v = Eigen::VectorXd::Zero(params.size());
        state.step = 0;
    }
    state.step += 1;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    params -= lr * ((state.m / c1).array() / ((state.v / c2).array().sqrt() + state.epsilon)).matrix();
}

TrainResult train(ModelType type, const Topology& topo, const Dataset& dataset,
                  const TrainConfig& cfg, const LossConfig& loss_cfg) {
    if (dataset.samples.empty()) throw ConfigError("training dataset is empty");
    if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.patience < 1)
        throw ConfigError("epochs, batch_size, and patience must be positive");
    if (!(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0))
        throw ConfigError("validation_fraction must lie in [0, 1)");

    const auto total = dataset.samples.size();
    auto val_count = static_cast<std::size_t>(
        std::llround(cfg.validation_fraction * static_cast<double>(total)));
    if (val_count >= total) val_count = total - 1;
    const std::size_t train_count = total - val_count;
    const std::span<const TrainingSample> train_split(dataset.samples.data(), train_count);
    const std::span<const TrainingSample> val_split(dataset.samples.data() + train_count,
                                                    val_count);
    // With no held-out samples the training split doubles as the monitor.
    const std::span<const TrainingSample> monitor = val_count > 0 ? val_split : train_split;

    Rng init_rng(derive_seed(cfg.seed, 0x696e6974)); // "init" stream
    Model model = initialize_model(type, topo, init_rng);
    Eigen::VectorXd params = pack_params(model);
    AdamState adam = AdamState::zero(params.size());
    PlateauScheduler scheduler(cfg.initial_lr, cfg.lr_factor, cfg.patience);

    TrainResult result;
    result.best = model;
    result.initial_e_c_val = mean_relative_error(model, monitor);
    double best_val = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<TrainingSample> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch_size));

    auto& hist = result.history;
    hist.train_loss.reserve(static_cast<std::size_t>(cfg.epochs));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, 0x10000u + static_cast<std::uint64_t>(epoch)));
        shuffle(order, shuffle_rng);

        double epoch_loss = 0.0;
        double epoch_err = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < train_count;
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(train_count, start + static_cast<std::size_t>(cfg.batch_size));
            batch.clear();
            for (std::size_t k = start; k < stop; ++k)
                batch.push_back(dataset.samples[order[k]]);

            const BatchEval eval = evaluate_batch(model, batch, loss_cfg, true, cfg.threads);
            if (!std::isfinite(eval.total()))
                throw TrainingError("training loss is not finite", epoch);
            epoch_loss += eval.total() * static_cast<double>(batch.size());
            epoch_err += eval.mean_rel_error * static_cast<double>(batch.size());
            seen += batch.size();

            adam_step(adam, params, eval.grad, scheduler.rate());
            unpack_params(model, params);

            // Dead-network guard: keep at least one base node active.
            auto& z = model.activations();
            if ((z.array() <= 0.0).all()) {
                Eigen::Index imax;
                z.maxCoeff(&imax);
                z(imax) = 1.0 / topo.base_count();
                params = pack_params(model);
            }
        }

        const BatchEval val_eval = evaluate_batch(model, monitor, loss_cfg, false, cfg.threads);
        if (!std::isfinite(val_eval.total()))
            throw TrainingError("validation loss is not finite", epoch);

        hist.train_loss.push_back(epoch_loss / static_cast<double>(seen));
        hist.val_loss.push_back(val_eval.total());
        hist.e_c_val.push_back(val_eval.mean_rel_error);
        hist.e_c_train.push_back(epoch_err / static_cast<double>(seen));
        hist.lr.push_back(scheduler.rate());

        if (val_eval.total() < best_val) {
            best_val = val_eval.total();
            result.best = model;
            result.best_epoch = epoch;
        }
        scheduler.observe(val_eval.total());
    }

    result.final = model;
    return result;
}

} // namespace matnet
