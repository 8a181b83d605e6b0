#include "geofuse/audit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace geofuse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ConstraintResult not_evaluable(int id, std::string why) {
    ConstraintResult r;
    r.id = id;
    r.name = constraint_name(id);
    r.note = "not evaluable: " + std::move(why);
    return r;
}

ConstraintResult verdict(int id, double measured, double threshold, bool pass, std::string note = {}) {
    ConstraintResult r;
    r.id = id;
    r.name = constraint_name(id);
    r.measured = measured;
    r.threshold = threshold;
    r.pass = pass;
    r.note = std::move(note);
    return r;
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("feature vectors differ in length");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

ConstraintResult check(int id, const RunRecord& run, const AuditConfig& cfg) {
    switch (id) {
    case 2: {
        if (!run.ingested_bytes) return not_evaluable(id, "ingested_bytes missing");
        if (!cfg.v_max) return not_evaluable(id, "v_max missing");
        const auto& d = *run.ingested_bytes;
        const double total = std::accumulate(d.begin(), d.end(), 0.0);
        return verdict(id, total, *cfg.v_max, total <= *cfg.v_max);
    }
    case 3: {
        if (!run.pca_retained) return not_evaluable(id, "pca_retained missing");
        if (!cfg.d_max) return not_evaluable(id, "d_max missing");
        const double de = static_cast<double>(*run.pca_retained);
        return verdict(id, de, *cfg.d_max, de <= *cfg.d_max);
    }
    case 4: {
        if (!run.true_positives || !run.true_plus_false_negatives) {
            return not_evaluable(id, "confusion counts missing");
        }
        if (!cfg.a_min) return not_evaluable(id, "a_min missing");
        if (*run.true_plus_false_negatives <= 0.0) return not_evaluable(id, "no samples");
        const double acc = *run.true_positives / *run.true_plus_false_negatives;
        return verdict(id, acc, *cfg.a_min, acc >= *cfg.a_min);
    }
    case 5: {
        if (!run.resource_cost || !run.evaluations) return not_evaluable(id, "cost or evaluation count missing");
        if (!cfg.c_available || !cfg.beta_resource) return not_evaluable(id, "c_available or beta_resource missing");
        const double bound = *cfg.c_available * (1.0 - std::exp(-*cfg.beta_resource * *run.evaluations));
        return verdict(id, *run.resource_cost, bound, *run.resource_cost <= bound);
    }
    case 6: {
        if (!run.hyperparameters || !run.hyperparameter_bounds) {
            return not_evaluable(id, "hyperparameters or bounds missing");
        }
        const auto& v = *run.hyperparameters;
        const auto& b = *run.hyperparameter_bounds;
        if (v.size() != b.size()) return not_evaluable(id, "one bound pair per hyperparameter required");
        double outside = 0.0;
        std::string note;
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (v[j] < b[j].first || v[j] > b[j].second) {
                outside += 1.0;
                note += (note.empty() ? "outside bounds: theta_" : " theta_") + std::to_string(j);
            }
        }
        return verdict(id, outside, 0.0, outside == 0.0, note);
    }
    case 7: {
        if (!run.temporal_signal || run.temporal_signal->size() < 2) {
            return not_evaluable(id, "temporal signal needs two samples");
        }
        if (!cfg.t_required) return not_evaluable(id, "t_required missing");
        const auto& s = *run.temporal_signal;
        double best = 0.0;
        for (std::size_t k = 1; k < s.size(); ++k) {
            const double dt = s[k].first - s[k - 1].first;
            if (!(dt > 0.0)) return not_evaluable(id, "sample times must increase");
            best = std::max(best, std::abs((s[k].second - s[k - 1].second) / dt));
        }
        return verdict(id, best, *cfg.t_required, best >= *cfg.t_required);
    }
    case 8: {
        if (!run.boundary_gradient_norm) return not_evaluable(id, "boundary gradient norm missing");
        if (!cfg.b_min) return not_evaluable(id, "b_min missing");
        return verdict(id, *run.boundary_gradient_norm, *cfg.b_min, *run.boundary_gradient_norm >= *cfg.b_min);
    }
    case 9: {
        if (!run.class_means || run.class_means->size() < 2) return not_evaluable(id, "need two class means");
        if (!cfg.s_max || !cfg.similarity_exponent) return not_evaluable(id, "s_max or exponent missing");
        const auto& m = *run.class_means;
        double worst = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            for (std::size_t j = 0; j < m.size(); ++j) {
                if (i == j) continue;
                const double dist = std::sqrt(squared_distance(m[i], m[j]));
                const double s = dist == 0.0 ? kInf : 1.0 / std::pow(dist, *cfg.similarity_exponent);
                worst = std::max(worst, s);
            }
        }
        return verdict(id, worst, *cfg.s_max, worst <= *cfg.s_max);
    }
    case 10: {
        if (!run.class_samples || run.class_samples->empty()) return not_evaluable(id, "class samples missing");
        if (!cfg.v_max_intra) return not_evaluable(id, "v_max_intra missing");
        double worst = 0.0;
        for (const auto& cls : *run.class_samples) {
            if (cls.empty()) continue;
            std::vector<double> mu(cls.front().size(), 0.0);
            for (const auto& x : cls)
                for (std::size_t d = 0; d < mu.size(); ++d) mu[d] += x.at(d);
            for (double& v : mu) v /= static_cast<double>(cls.size());
            for (const auto& x : cls) worst = std::max(worst, squared_distance(x, mu));
        }
        return verdict(id, worst, *cfg.v_max_intra, worst <= *cfg.v_max_intra);
    }
    case 11: {
        if (!run.train_accuracy || !run.test_accuracy) return not_evaluable(id, "train/test accuracy missing");
        if (!cfg.overfit_tolerance) return not_evaluable(id, "overfit tolerance missing");
        if (*run.test_accuracy == 0.0) return not_evaluable(id, "test accuracy is zero");
        const double gap = *run.train_accuracy - *run.test_accuracy;
        const double bound =
            *cfg.overfit_tolerance * (1.0 + *run.train_accuracy * *run.train_accuracy / *run.test_accuracy);
        return verdict(id, gap, bound, gap <= bound);
    }
    case 12: {
        if (!run.mixed_pixels || !run.pixel_variance) return not_evaluable(id, "mixed pixel count or variance missing");
        if (!cfg.m_max || !cfg.gamma) return not_evaluable(id, "m_max or gamma missing");
        const double bound = *cfg.m_max * std::exp(-*cfg.gamma * *run.pixel_variance);
        return verdict(id, *run.mixed_pixels, bound, *run.mixed_pixels <= bound);
    }
    case 13: {
        if (!run.max_iterations) return not_evaluable(id, "max_iterations missing");
        if (!cfg.i_required || !cfg.alpha_iter || !cfg.beta_iter) {
            return not_evaluable(id, "i_required, alpha_iter or beta_iter missing");
        }
        const double bound = std::ceil(*cfg.i_required * (1.0 + *cfg.alpha_iter * std::exp(-*cfg.beta_iter * 0.0)));
        return verdict(id, *run.max_iterations, bound, *run.max_iterations >= bound, "t = 0");
    }
    case 14: {
        if (!run.integration_metric) return not_evaluable(id, "integration metric missing");
        if (!cfg.r_min) return not_evaluable(id, "r_min missing");
        return verdict(id, *run.integration_metric, *cfg.r_min, *run.integration_metric >= *cfg.r_min);
    }
    case 15: {
        if (!run.change_sensitivity || run.change_sensitivity->empty()) {
            return not_evaluable(id, "change sensitivity samples missing");
        }
        if (!cfg.c_min || !cfg.omega) return not_evaluable(id, "c_min or omega missing");
        // measured: smallest margin C_c(t) - C_min (1 + sin(omega t))
        double margin = kInf;
        for (const auto& [t, c] : *run.change_sensitivity) {
            margin = std::min(margin, c - *cfg.c_min * (1.0 + std::sin(*cfg.omega * t)));
        }
        return verdict(id, margin, 0.0, margin >= 0.0, "min margin over samples");
    }
    case 16: {
        if (!run.fitness_trace || run.fitness_trace->empty()) return not_evaluable(id, "fitness trace missing");
        if (!cfg.convergence_tolerance) return not_evaluable(id, "convergence tolerance missing");
        const auto& tr = *run.fitness_trace;
        const std::size_t back = std::min(cfg.convergence_window, tr.size() - 1);
        const double gain = tr.back() - tr[tr.size() - 1 - back];
        return verdict(id, gain, *cfg.convergence_tolerance, gain < *cfg.convergence_tolerance,
                       back < cfg.convergence_window ? "trace shorter than window" : "");
    }
    default:
        throw std::invalid_argument("unknown constraint id " + std::to_string(id));
    }
}

}  // namespace

const char* constraint_name(int id) {
    switch (id) {
    case 1: return "objective";
    case 2: return "data_volume";
    case 3: return "dimensionality";
    case 4: return "classification_accuracy";
    case 5: return "computational_resources";
    case 6: return "hyperparameter_range";
    case 7: return "temporal_analysis";
    case 8: return "boundary_detection";
    case 9: return "inter_class_similarity";
    case 10: return "intra_class_variability";
    case 11: return "overfitting_control";
    case 12: return "mixed_pixels";
    case 13: return "optimization_iterations";
    case 14: return "gis_integration";
    case 15: return "change_sensitivity";
    case 16: return "convergence";
    default: return "unknown";
    }
}

const ConstraintResult* ConstraintReport::find(int id) const {
    for (const auto& r : results)
        if (r.id == id) return &r;
    return nullptr;
}

std::vector<int> ConstraintReport::failed() const {
    std::vector<int> out;
    for (const auto& r : results)
        if (r.id != 1 && r.pass && !*r.pass) out.push_back(r.id);
    return out;
}

ConstraintReport audit(const RunRecord& run, const AuditConfig& config) {
    for (int id : config.enabled) {
        if (id < 2 || id > 16) throw std::invalid_argument("constraint id out of range: " + std::to_string(id));
    }
    ConstraintReport report;

    ConstraintResult objective;
    objective.id = 1;
    objective.name = constraint_name(1);
    objective.measured = run.objective_value;
    objective.note = "informational";
    report.results.push_back(objective);

    bool all_pass = true;
    std::vector<int> missing;
    for (int id : config.enabled) {
        ConstraintResult r = check(id, run, config);
        if (r.measured && !std::isfinite(*r.measured) && !(id == 9 && *r.measured == kInf)) {
            r.pass.reset();
            r.note = "not evaluable: non-finite measurement";
        }
        if (!r.pass) {
            missing.push_back(id);
        } else {
            all_pass = all_pass && *r.pass;
        }
        report.results.push_back(std::move(r));
    }
    if (missing.empty()) {
        report.feasible = all_pass;
    } else {
        std::ostringstream msg;
        msg << "verdict withheld; not evaluable:";
        for (int id : missing) msg << ' ' << id;
        report.diagnostic = msg.str();
    }
    return report;
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string report_csv(const ConstraintReport& report) {
    std::string out = "id,name,measured,threshold,pass\n";
    for (const auto& r : report.results) {
        out += std::to_string(r.id);
        out += ',';
        out += r.name;
        out += ',';
        if (r.measured) out += format_number(*r.measured);
        out += ',';
        if (r.threshold) out += format_number(*r.threshold);
        out += ',';
        if (r.pass) out += *r.pass ? "true" : "false";
        out += '\n';
    }
    return out;
}

}  // namespace geofuse
