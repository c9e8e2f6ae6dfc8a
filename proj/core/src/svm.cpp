#include "emorep/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "emorep/parallel.hpp"
#include "emorep/rng.hpp"
#include "json.hpp"

namespace emorep {

int MultiClassModel::feature_dim() const {
    return models.empty() ? 0 : static_cast<int>(models.front().w.size());
}

double svm_objective(const std::vector<std::vector<double>>& xs, const std::vector<int>& ys,
                     double lambda, const std::vector<double>& w, double b) {
    const std::size_t n = xs.size();
    double reg = 0.0;
    for (double v : w) reg += v * v;
    double hinge = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double m = b;
        const auto& x = xs[i];
        for (std::size_t j = 0; j < x.size(); ++j) m += w[j] * x[j];
        hinge += std::max(0.0, 1.0 - ys[i] * m);
    }
    return lambda * reg + hinge / static_cast<double>(n);
}

namespace {

// Dual coordinate descent state for the hinge SVM with the bias held fixed.
// With b fixed the dual is box-constrained only:
//   max_{0 <= a_i <= 1/n}  sum_i a_i * rho_i(b) - (1/(4 lambda)) ||sum_i a_i y_i x_i||^2
// with w(a) = (1/(2 lambda)) sum_i a_i y_i x_i and rho_i(b) = 1 - y_i b.
// The optimality signal S(b) = sum_i a_i* y_i is non-increasing in b and
// crosses zero at the optimal unregularized bias, which the outer loop locates
// by bisection.
struct DualSolver {
    const std::vector<std::vector<double>>& xs;
    const std::vector<int>& ys;
    const double lambda;
    const std::size_t n;
    const std::size_t dim;
    const double box;  // 1/n

    std::vector<double> alpha;
    std::vector<double> w;
    std::vector<double> qii;
    std::vector<std::size_t> order;

    // incumbent: best primal seen, with its (w, b)
    double best_objective = std::numeric_limits<double>::infinity();
    std::vector<double> best_w;
    double best_b = 0.0;
    std::vector<double> history;
    int passes_used = 0;

    DualSolver(const std::vector<std::vector<double>>& xs_, const std::vector<int>& ys_,
               double lambda_, std::uint64_t seed)
        : xs(xs_),
          ys(ys_),
          lambda(lambda_),
          n(xs_.size()),
          dim(xs_.front().size()),
          box(1.0 / static_cast<double>(n)),
          alpha(n, 0.0),
          w(dim, 0.0),
          qii(n) {
        for (std::size_t i = 0; i < n; ++i) {
            double q = 0.0;
            for (double v : xs[i]) q += v * v;
            qii[i] = q;
        }
        Rng rng(seed);
        order = rng.permutation(n);
    }

    double margin(std::size_t i) const {
        double m = 0.0;
        const auto& x = xs[i];
        for (std::size_t j = 0; j < dim; ++j) m += w[j] * x[j];
        return m;
    }

    double dual_sum() const {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += alpha[i] * ys[i];
        return s;
    }

    void record(double b) {
        const double obj = svm_objective(xs, ys, lambda, w, b);
        if (obj < best_objective) {
            best_objective = obj;
            best_w = w;
            best_b = b;
        }
        history.push_back(best_objective);
    }

    // One coordinate pass at fixed b; returns the max projected-gradient violation.
    double pass(double b) {
        double maxviol = 0.0;
        for (std::size_t idx : order) {
            const double rho = 1.0 - ys[idx] * b;
            const double g = rho - ys[idx] * margin(idx);  // dD/da_i
            double pg = g;
            if (alpha[idx] <= 0.0)
                pg = std::max(g, 0.0);
            else if (alpha[idx] >= box)
                pg = std::min(g, 0.0);
            maxviol = std::max(maxviol, std::abs(pg));
            if (pg == 0.0) continue;

            double next;
            if (qii[idx] > 0.0)
                next = std::clamp(alpha[idx] + 2.0 * lambda * g / qii[idx], 0.0, box);
            else
                next = g > 0.0 ? box : 0.0;  // zero vector: dual linear in a_i
            const double delta = next - alpha[idx];
            if (delta == 0.0) continue;
            alpha[idx] = next;
            const double scale = delta * ys[idx] / (2.0 * lambda);
            const auto& x = xs[idx];
            for (std::size_t j = 0; j < dim; ++j) w[j] += scale * x[j];
        }
        return maxviol;
    }

    // Runs up to max_passes at fixed b, stopping early below eps violation.
    void solve_at(double b, int max_passes, double eps, int budget) {
        for (int p = 0; p < max_passes && passes_used < budget; ++p) {
            const double viol = pass(b);
            ++passes_used;
            record(b);
            if (viol < eps) break;
        }
    }
};

}  // namespace

LinearModel train_binary(const std::vector<std::vector<double>>& xs,
                         const std::vector<int>& ys, const TrainConfig& cfg) {
    if (xs.empty()) throw Error("train_binary: empty input");
    if (xs.size() != ys.size()) throw Error("train_binary: feature/label size mismatch");
    if (!(cfg.lambda > 0.0)) throw Error("train_binary: lambda must be > 0");
    const std::size_t dim = xs.front().size();
    int n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i].size() != dim) throw Error("train_binary: inconsistent feature dims");
        for (double v : xs[i])
            if (!std::isfinite(v)) throw Error("train_binary: non-finite feature entry");
        if (ys[i] == 1)
            ++n_pos;
        else if (ys[i] == -1)
            ++n_neg;
        else
            throw Error("train_binary: labels must be +-1");
    }

    LinearModel model;
    model.lambda = cfg.lambda;
    model.w.assign(dim, 0.0);

    if (n_pos == 0 || n_neg == 0) {
        // constant decision with the sign of the present class
        model.degenerate = true;
        model.b = n_pos > 0 ? 1.0 : -1.0;
        model.final_objective = svm_objective(xs, ys, cfg.lambda, model.w, model.b);
        model.objective_history = {model.final_objective};
        return model;
    }

    DualSolver solver(xs, ys, cfg.lambda, cfg.seed);
    const int budget = std::max(cfg.epochs, 4);
    const double eps = std::max(cfg.tol * 0.1, 1e-13);

    if (!cfg.fit_bias) {
        solver.solve_at(0.0, budget, eps, budget);
    } else {
        // first solve at b = 0, then bisect on S(b); V(b) is 1-Lipschitz so the
        // bracket width bounds the bias term's contribution to the gap
        solver.solve_at(0.0, std::max(budget / 4, 2), eps, budget);
        const double tol_b = std::clamp(cfg.tol * 0.1, 1e-12, 1e-6);
        const int eval_passes = std::max(budget / 32, 2);

        double lo = 0.0, hi = 0.0;
        double s0 = solver.dual_sum();
        if (s0 > 0.0) {
            hi = 1.0;
            for (int k = 0; k < 60 && solver.passes_used < budget; ++k) {
                solver.solve_at(hi, eval_passes, eps, budget);
                if (solver.dual_sum() <= 0.0) break;
                lo = hi;
                hi *= 2.0;
            }
        } else if (s0 < 0.0) {
            lo = -1.0;
            for (int k = 0; k < 60 && solver.passes_used < budget; ++k) {
                solver.solve_at(lo, eval_passes, eps, budget);
                if (solver.dual_sum() >= 0.0) break;
                hi = lo;
                lo *= 2.0;
            }
        }
        while (hi - lo > tol_b && solver.passes_used < budget) {
            const double mid = 0.5 * (lo + hi);
            solver.solve_at(mid, eval_passes, eps, budget);
            if (solver.dual_sum() >= 0.0)
                lo = mid;
            else
                hi = mid;
        }
        // polish at the located bias with the remaining budget
        solver.solve_at(0.5 * (lo + hi), budget, eps, budget);
    }

    model.w = solver.best_w;
    model.b = solver.best_b;
    model.final_objective = solver.best_objective;
    model.objective_history = std::move(solver.history);
    return model;
}

double score(const LinearModel& m, const std::vector<double>& x) {
    if (x.size() != m.w.size())
        throw Error("score: feature dim " + std::to_string(x.size()) + " != model dim " +
                    std::to_string(m.w.size()));
    double s = m.b;
    for (std::size_t j = 0; j < x.size(); ++j) s += m.w[j] * x[j];
    return s;
}

MultiClassModel train_one_vs_all(const std::vector<std::vector<double>>& xs,
                                 const std::vector<int>& ys,
                                 const std::vector<std::string>& class_order,
                                 const TrainConfig& cfg) {
    if (class_order.empty()) throw Error("train_one_vs_all: empty class order");
    {
        std::set<std::string> names(class_order.begin(), class_order.end());
        if (names.size() != class_order.size())
            throw Error("train_one_vs_all: duplicate class names");
    }
    if (xs.size() != ys.size()) throw Error("train_one_vs_all: feature/label size mismatch");
    std::set<int> present(ys.begin(), ys.end());
    for (int y : present)
        if (y < 0 || y >= static_cast<int>(class_order.size()))
            throw Error("train_one_vs_all: label index out of range");
    if (present.size() < 2) throw Error("train_one_vs_all: need at least 2 distinct classes");

    // Standardize per dimension during optimization; the affine map is folded
    // back into the returned weights, so the models consume raw features. This
    // keeps the isotropic regularizer meaningful when input scales differ
    // (histogram counts vs classifier margins).
    const std::size_t n = xs.size();
    const std::size_t dim = xs.front().size();
    std::vector<double> mu(dim, 0.0), sd(dim, 0.0);
    for (const auto& x : xs)
        for (std::size_t j = 0; j < dim; ++j) mu[j] += x[j];
    for (std::size_t j = 0; j < dim; ++j) mu[j] /= static_cast<double>(n);
    for (const auto& x : xs)
        for (std::size_t j = 0; j < dim; ++j) {
            const double t = x[j] - mu[j];
            sd[j] += t * t;
        }
    for (std::size_t j = 0; j < dim; ++j)
        sd[j] = std::max(std::sqrt(sd[j] / static_cast<double>(n)), 1e-12);
    std::vector<std::vector<double>> standardized(n);
    for (std::size_t i = 0; i < n; ++i) {
        standardized[i].resize(dim);
        for (std::size_t j = 0; j < dim; ++j) standardized[i][j] = (xs[i][j] - mu[j]) / sd[j];
    }

    MultiClassModel mc;
    mc.class_order = class_order;
    mc.models.resize(class_order.size());
    parallel_for(class_order.size(), cfg.threads, [&](std::size_t c) {
        std::vector<int> binary(ys.size());
        for (std::size_t i = 0; i < ys.size(); ++i)
            binary[i] = ys[i] == static_cast<int>(c) ? 1 : -1;
        TrainConfig sub = cfg;
        sub.seed = substream_seed(cfg.seed, c);
        sub.threads = 1;
        LinearModel m = train_binary(standardized, binary, sub);
        double shift = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            shift += m.w[j] * mu[j] / sd[j];
            m.w[j] /= sd[j];
        }
        m.b -= shift;
        mc.models[c] = m;
    });
    return mc;
}

std::pair<int, std::vector<double>> predict(const MultiClassModel& m,
                                            const std::vector<double>& x) {
    if (m.models.empty()) throw Error("predict: empty model");
    std::vector<double> scores(m.models.size());
    for (std::size_t c = 0; c < m.models.size(); ++c) scores[c] = score(m.models[c], x);
    int best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c)
        if (scores[c] > scores[best]) best = static_cast<int>(c);  // ties keep lowest
    return {best, scores};
}

std::string multiclass_to_json(const MultiClassModel& m) {
    nlohmann::json doc;
    doc["class_order"] = m.class_order;
    doc["models"] = nlohmann::json::array();
    for (const auto& lm : m.models) {
        nlohmann::json jm;
        jm["w"] = lm.w;
        jm["b"] = lm.b;
        jm["lambda"] = lm.lambda;
        doc["models"].push_back(jm);
    }
    return doc.dump();
}

MultiClassModel multiclass_from_json(const std::string& text) {
    MultiClassModel m;
    try {
        const auto doc = nlohmann::json::parse(text);
        m.class_order = doc.at("class_order").get<std::vector<std::string>>();
        for (const auto& jm : doc.at("models")) {
            LinearModel lm;
            lm.w = jm.at("w").get<std::vector<double>>();
            lm.b = jm.at("b").get<double>();
            lm.lambda = jm.at("lambda").get<double>();
            m.models.push_back(std::move(lm));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("model json: ") + e.what());
    }
    if (m.models.size() != m.class_order.size())
        throw Error("model json: class_order and models disagree");
    return m;
}

}  // namespace emorep
