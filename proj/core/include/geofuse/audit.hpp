#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace geofuse {

/// Measured quantities of one pipeline run. Every field is optional; a check
/// whose inputs are missing is reported as not evaluable.
struct RunRecord {
    // (2) bytes ingested at each step
    std::optional<std::vector<double>> ingested_bytes;
    // (3)
    std::optional<std::size_t> pca_retained;
    // (4) summed over classes
    std::optional<double> true_positives;
    std::optional<double> true_plus_false_negatives;
    // (5) cost of N evaluations
    std::optional<double> resource_cost;
    std::optional<double> evaluations;
    // (6) decoded hyperparameter values and their [low, high] bounds
    std::optional<std::vector<double>> hyperparameters;
    std::optional<std::vector<std::pair<double, double>>> hyperparameter_bounds;
    // (7) observed temporal signal sampled at increasing times
    std::optional<std::vector<std::pair<double, double>>> temporal_signal;
    // (8)
    std::optional<double> boundary_gradient_norm;
    // (9) one mean feature vector per class
    std::optional<std::vector<std::vector<double>>> class_means;
    // (10) per class, the feature vectors of its samples
    std::optional<std::vector<std::vector<std::vector<double>>>> class_samples;
    // (11)
    std::optional<double> train_accuracy;
    std::optional<double> test_accuracy;
    // (12)
    std::optional<double> mixed_pixels;
    std::optional<double> pixel_variance;
    // (13)
    std::optional<double> max_iterations;
    // (14) integration metric D(G, R)
    std::optional<double> integration_metric;
    // (15) (t, C_c(t)) samples
    std::optional<std::vector<std::pair<double, double>>> change_sensitivity;
    // (16) best fitness after each iteration
    std::optional<std::vector<double>> fitness_trace;
    // objective (1), informational only
    std::optional<double> objective_value;
};

struct AuditConfig {
    /// Constraint ids 2..16 to evaluate.
    std::set<int> enabled{2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};

    std::optional<double> v_max;              // (2)
    std::optional<double> d_max;              // (3)
    std::optional<double> a_min;              // (4)
    std::optional<double> c_available;       // (5)
    std::optional<double> beta_resource;     // (5)
    std::optional<double> t_required;        // (7)
    std::optional<double> b_min;             // (8)
    std::optional<double> similarity_exponent;  // (9) p
    std::optional<double> s_max;             // (9)
    std::optional<double> v_max_intra;       // (10)
    std::optional<double> overfit_tolerance; // (11) epsilon
    std::optional<double> m_max;             // (12)
    std::optional<double> gamma;             // (12)
    std::optional<double> i_required;        // (13)
    std::optional<double> alpha_iter;        // (13)
    std::optional<double> beta_iter;         // (13)
    std::optional<double> r_min;             // (14)
    std::optional<double> c_min;             // (15)
    std::optional<double> omega;             // (15)
    std::optional<double> convergence_tolerance;  // (16)
    std::size_t convergence_window = 10;          // (16)
};

struct ConstraintResult {
    int id = 0;  // 1 is the objective row
    std::string name;
    std::optional<double> measured;
    std::optional<double> threshold;
    std::optional<bool> pass;  // empty: not evaluable or informational
    std::string note;
};

struct ConstraintReport {
    std::vector<ConstraintResult> results;
    /// Conjunction of enabled checks; empty when any of them is not evaluable.
    std::optional<bool> feasible;
    std::string diagnostic;

    const ConstraintResult* find(int id) const;
    /// Ids of enabled checks that failed.
    std::vector<int> failed() const;
};

const char* constraint_name(int id);

ConstraintReport audit(const RunRecord& run, const AuditConfig& config);

/// CSV with header id,name,measured,threshold,pass and LF line endings.
std::string report_csv(const ConstraintReport& report);

/// Shortest round-trip decimal form used by every CSV writer.
std::string format_number(double value);

}  // namespace geofuse
