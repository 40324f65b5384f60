#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "synthscan/classifier.hpp"
#include "synthscan/errors.hpp"
#include "synthscan/rng.hpp"

namespace synthscan {

std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) raise_data("ShapeMismatch", "softmax of empty logits");
    for (double v : logits)
        if (!std::isfinite(v)) raise_data("NonFiniteInput", "softmax requires finite logits");
    double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

Prediction predict_from_logits(const std::vector<double>& logits) {
    std::vector<double> p = softmax(logits);
    int best = 0;
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[best]) best = static_cast<int>(i);
    return {best, p[best]};
}

namespace detail {

// Mean cross-entropy over the batch; writes d(loss)/d(logits) when dlogits is
// non-null. Rows are independent; the loss reduction stays serial.
double softmax_ce(const double* logits, const int* labels, int samples, int classes,
                  double* dlogits) {
    std::vector<double> losses(static_cast<std::size_t>(samples));
#pragma omp parallel for schedule(static)
    for (int s = 0; s < samples; ++s) {
        const double* row = logits + static_cast<std::size_t>(s) * classes;
        double mx = row[0];
        for (int c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
        double sum = 0.0;
        for (int c = 0; c < classes; ++c) sum += std::exp(row[c] - mx);
        double log_sum = std::log(sum);
        losses[static_cast<std::size_t>(s)] = -(row[labels[s]] - mx - log_sum);
        if (dlogits) {
            double* drow = dlogits + static_cast<std::size_t>(s) * classes;
            for (int c = 0; c < classes; ++c) {
                double p = std::exp(row[c] - mx) / sum;
                drow[c] = (p - (c == labels[s] ? 1.0 : 0.0)) / samples;
            }
        }
    }
    double total = 0.0;
    for (double l : losses) total += l;
    return total / samples;
}

}  // namespace detail

EvalStats evaluate_model(BatchModel& model, const double* x, const int* y, std::size_t n) {
    if (n == 0) raise_data("EmptyDataset", "cannot evaluate on zero samples");
    const int classes = model.n_classes();
    const std::size_t stride = model.input_size();
    constexpr std::size_t kChunk = 256;
    std::vector<double> logits(kChunk * static_cast<std::size_t>(classes));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t off = 0; off < n; off += kChunk) {
        int take = static_cast<int>(std::min(kChunk, n - off));
        model.forward(x + off * stride, take, logits.data());
        loss_sum += detail::softmax_ce(logits.data(), y + off, take, classes, nullptr) * take;
        for (int s = 0; s < take; ++s) {
            const double* row = logits.data() + static_cast<std::size_t>(s) * classes;
            int best = 0;
            for (int c = 1; c < classes; ++c)
                if (row[c] > row[best]) best = c;
            if (best == y[off + static_cast<std::size_t>(s)]) ++correct;
        }
    }
    return {loss_sum / static_cast<double>(n), static_cast<double>(correct) / static_cast<double>(n)};
}

TrainHistory train_model(BatchModel& model, const double* x, const int* y, std::size_t n,
                         const double* x_holdout, const int* y_holdout, std::size_t n_holdout,
                         const TrainConfig& config) {
    if (n == 0) raise_data("EmptyDataset", "training set is empty");
    if (config.epochs < 1) raise_data("BadConfig", "epochs must be >= 1");
    if (config.batch_size < 1) raise_data("BadConfig", "batch_size must be >= 1");
    if (!(config.learning_rate > 0.0)) raise_data("BadConfig", "learning_rate must be > 0");
    const int classes = model.n_classes();
    for (std::size_t i = 0; i < n; ++i)
        if (y[i] < 0 || y[i] >= classes)
            raise_data("LabelOutOfRange", "label " + std::to_string(y[i]) + " at sample " +
                                              std::to_string(i));

    const std::size_t stride = model.input_size();
    auto views = model.params();
    auto gviews = model.grads();
    std::vector<std::vector<double>> velocity(views.size());
    for (std::size_t i = 0; i < views.size(); ++i) velocity[i].assign(views[i].size, 0.0);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(config.seed, 0x7261696eULL));

    const std::size_t batch = static_cast<std::size_t>(config.batch_size);
    std::vector<double> bx(batch * stride);
    std::vector<int> by(batch);

    TrainHistory history;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t off = 0; off < n; off += batch) {
            int take = static_cast<int>(std::min(batch, n - off));
            for (int s = 0; s < take; ++s) {
                std::size_t src = order[off + static_cast<std::size_t>(s)];
                std::copy_n(x + src * stride, stride, bx.begin() + static_cast<std::size_t>(s) * stride);
                by[static_cast<std::size_t>(s)] = y[src];
            }
            model.forward_backward(bx.data(), by.data(), take);
            for (std::size_t i = 0; i < views.size(); ++i) {
                double* p = views[i].data;
                const double* g = gviews[i].data;
                double* v = velocity[i].data();
                for (std::size_t j = 0; j < views[i].size; ++j) {
                    v[j] = config.momentum * v[j] - config.learning_rate * g[j];
                    p[j] += v[j];
                }
            }
        }
        EvalStats train_stats = evaluate_model(model, x, y, n);
        history.train_loss.push_back(train_stats.loss);
        history.train_acc.push_back(train_stats.accuracy);
        if (n_holdout > 0) {
            EvalStats ho = evaluate_model(model, x_holdout, y_holdout, n_holdout);
            history.holdout_loss.push_back(ho.loss);
            history.holdout_acc.push_back(ho.accuracy);
        } else {
            history.holdout_loss.push_back(std::numeric_limits<double>::quiet_NaN());
            history.holdout_acc.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return history;
}

namespace {

double gradient_check_impl(BatchModel& model, const double* x, const int* y, int samples,
                           double epsilon, std::size_t max_params, std::uint64_t seed,
                           bool sampled) {
    if (samples < 1) raise_data("EmptyDataset", "gradient check needs at least one sample");
    if (!(epsilon > 0.0) || epsilon > 1e-2)
        raise_data("BadEpsilon", "epsilon must lie in (0, 1e-2]");

    model.forward_backward(x, y, samples);
    auto gviews = model.grads();
    std::vector<std::vector<double>> analytic(gviews.size());
    for (std::size_t i = 0; i < gviews.size(); ++i)
        analytic[i].assign(gviews[i].data, gviews[i].data + gviews[i].size);

    const int classes = model.n_classes();
    std::vector<double> logits(static_cast<std::size_t>(samples) * classes);
    auto loss_at = [&]() {
        model.forward(x, samples, logits.data());
        return detail::softmax_ce(logits.data(), y, samples, classes, nullptr);
    };

    auto views = model.params();
    std::size_t total = 0;
    for (const auto& v : views) total += v.size;

    // flat parameter indices to probe
    std::vector<std::size_t> picks;
    if (!sampled || total <= max_params) {
        picks.resize(total);
        for (std::size_t i = 0; i < total; ++i) picks[i] = i;
    } else {
        Rng rng(mix_seed(seed, 0x67636864ULL));
        picks.resize(total);
        for (std::size_t i = 0; i < total; ++i) picks[i] = i;
        rng.shuffle(picks);
        picks.resize(max_params);
    }

    double worst = 0.0;
    for (std::size_t flat : picks) {
        std::size_t i = 0, j = flat;
        while (j >= views[i].size) {
            j -= views[i].size;
            ++i;
        }
        double saved = views[i].data[j];
        views[i].data[j] = saved + epsilon;
        double up = loss_at();
        views[i].data[j] = saved - epsilon;
        double down = loss_at();
        views[i].data[j] = saved;
        double numeric = (up - down) / (2.0 * epsilon);
        double a = analytic[i][j];
        double rel = std::fabs(a - numeric) / std::max({1.0, std::fabs(a), std::fabs(numeric)});
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace

double gradient_check(BatchModel& model, const double* x, const int* y, int samples,
                      double epsilon) {
    return gradient_check_impl(model, x, y, samples, epsilon, 0, 0, false);
}

double gradient_check_sampled(BatchModel& model, const double* x, const int* y, int samples,
                              double epsilon, std::size_t max_params, std::uint64_t seed) {
    return gradient_check_impl(model, x, y, samples, epsilon, max_params, seed, true);
}

std::string train_config_digest(const TrainConfig& config) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "epochs=%d;batch=%d;lr=%.17g;momentum=%.17g;seed=%llu",
                  config.epochs, config.batch_size, config.learning_rate, config.momentum,
                  static_cast<unsigned long long>(config.seed));
    char out[24];
    std::snprintf(out, sizeof(out), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(buf)));
    return out;
}

}  // namespace synthscan
