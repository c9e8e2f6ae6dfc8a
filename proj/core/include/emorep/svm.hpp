#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "emorep/error.hpp"

namespace emorep {

struct TrainConfig {
    double lambda = 0.01;  // > 0
    int epochs = 200;      // optimizer pass budget
    double tol = 1e-6;     // objective tolerance
    std::uint64_t seed = 0;
    bool fit_bias = true;  // bias is explicit and unregularized
    int threads = 1;       // one-vs-all parallelism
};

struct LinearModel {
    std::vector<double> w;
    double b = 0.0;
    double lambda = 0.01;
    // all-one-class training input yields a constant-decision model
    bool degenerate = false;
    double final_objective = 0.0;
    // incumbent primal objective after each optimizer pass; non-increasing
    std::vector<double> objective_history;
};

struct MultiClassModel {
    std::vector<LinearModel> models;  // one per class, in class_order
    std::vector<std::string> class_order;

    int feature_dim() const;
};

// Primal objective lambda*||w||^2 + (1/n) sum max(0, 1 - y_i (w.x_i + b)).
double svm_objective(const std::vector<std::vector<double>>& xs, const std::vector<int>& ys,
                     double lambda, const std::vector<double>& w, double b);

// Minimizes the objective above with a deterministic dual coordinate descent
// solver (visiting order derived from cfg.seed). The unregularized bias is
// located by bisection on the optimality signal sum_i alpha_i y_i, which is
// non-increasing in b. objective_history records the incumbent (the model the
// solver would return if stopped) once per pass.
//
// Labels are +-1. An all-one-class input returns a degenerate model scoring
// the constant sign of the present class. An empty input throws.
LinearModel train_binary(const std::vector<std::vector<double>>& xs,
                         const std::vector<int>& ys, const TrainConfig& cfg);

// Signed margin w.x + b.
double score(const LinearModel& m, const std::vector<double>& x);

// One binary model per class in class_order (that class positive, rest
// negative). ys holds class indices into class_order. Requires at least two
// distinct classes. Per-class problems may train in parallel (cfg.threads).
// Inputs are standardized per dimension during optimization and the affine
// map is folded back into the weights, so the returned models consume raw
// features; objective histories refer to the standardized problem.
MultiClassModel train_one_vs_all(const std::vector<std::vector<double>>& xs,
                                 const std::vector<int>& ys,
                                 const std::vector<std::string>& class_order,
                                 const TrainConfig& cfg);

// argmax class (ties to lowest class index) and the full score vector.
std::pair<int, std::vector<double>> predict(const MultiClassModel& m,
                                            const std::vector<double>& x);

// JSON: { "class_order": [...], "models": [ { "w": [...], "b": b, "lambda": l } ] }
std::string multiclass_to_json(const MultiClassModel& m);
MultiClassModel multiclass_from_json(const std::string& text);

}  // namespace emorep
