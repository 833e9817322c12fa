#include "rbnn/train_det.hpp"

#include <cmath>
#include <numeric>

#include "rbnn/parallel.hpp"
#include "rbnn/rng.hpp"

namespace rbnn {

namespace {
// fixed chunk rows so gradients do not depend on the thread count
constexpr int kChunkRows = 32;
}

DetFit train_rffnn(const std::vector<Window>& train, const std::vector<Window>& val,
                   const DetConfig& cfg) {
    if (train.empty()) throw std::invalid_argument("train_rffnn: no training windows");
    cfg.arch.validate();

    Vec params = init_params(cfg.arch, cfg.seed);
    AdamState adam(params.size());

    TrainHistory hist;
    Vec best = params;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;

    std::vector<int> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = cfg.lr.at(epoch);
        Rng shuffle_rng(cfg.seed, 0x5u * static_cast<std::uint64_t>(epoch) + 1);
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        bool finite = true;
        for (size_t at = 0; at < order.size() && finite; at += static_cast<size_t>(cfg.batch)) {
            size_t end = std::min(order.size(), at + static_cast<size_t>(cfg.batch));
            std::vector<int> batch(order.begin() + static_cast<long>(at),
                                   order.begin() + static_cast<long>(end));
            int b = static_cast<int>(batch.size());
            int n_chunks = (b + kChunkRows - 1) / kChunkRows;

            std::vector<double> losses(static_cast<size_t>(n_chunks));
            std::vector<Vec> grads(static_cast<size_t>(n_chunks));
            try {
                parallel_tasks(
                    n_chunks,
                    [&](int c) {
                        int lo = c * kChunkRows;
                        int hi = std::min(b, lo + kChunkRows);
                        std::vector<int> part(batch.begin() + lo, batch.begin() + hi);
                        WindowBatch wb = stack_windows(train, part);
                        Tape tape(cfg.arch, params);
                        Tape::Var loss = batch_huber_loss(tape, rollout_on_tape(tape, wb), wb);
                        losses[static_cast<size_t>(c)] = tape.value(loss);
                        grads[static_cast<size_t>(c)] = tape.grad_params(loss);
                    },
                    cfg.threads);
            } catch (const std::runtime_error& ex) {
                hist.aborted = true;
                hist.abort_reason =
                    "epoch " + std::to_string(epoch) + ": " + ex.what();
                break;
            }

            double loss = 0.0;
            Vec grad = Vec::Zero(params.size());
            for (int c = 0; c < n_chunks; ++c) {
                int lo = c * kChunkRows;
                int hi = std::min(b, lo + kChunkRows);
                double wgt = static_cast<double>(hi - lo) / b;
                loss += wgt * losses[static_cast<size_t>(c)];
                grad += wgt * grads[static_cast<size_t>(c)];
            }
            if (!std::isfinite(loss) || !grad.allFinite()) {
                hist.aborted = true;
                hist.abort_reason = "non-finite loss at epoch " + std::to_string(epoch);
                finite = false;
                break;
            }
            epoch_loss += loss * static_cast<double>(b) / static_cast<double>(train.size());
            adam_step(adam, params, grad, lr);
        }
        if (hist.aborted) break;

        hist.train.push_back(epoch_loss);
        double val_loss = epoch_loss;
        if (!val.empty()) {
            try {
                val_loss = total_loss(params, cfg.arch, val);
            } catch (const RolloutDivergence&) {
                val_loss = std::numeric_limits<double>::infinity();
            }
        }
        hist.val.push_back(val_loss);

        if (val_loss < best_val) {
            best_val = val_loss;
            best = params;
            hist.best_epoch = epoch;
            since_best = 0;
        } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
            break;
        }
    }

    if (hist.best_epoch < 0) {
        best = params;  // nothing ever improved: keep the last finite state
    }
    return {best, std::move(hist)};
}

}  // namespace rbnn
