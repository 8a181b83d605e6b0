#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "geofuse/rng.hpp"
#include "geofuse/trainer.hpp"

namespace geofuse {

// ---------------------------------------------------------------------------
// Search space

struct ContinuousDim {
    double low = 0.0;
    double high = 1.0;
    bool log_scale = false;
};

/// Values low, low+step, ..., high.
struct IntegerDim {
    long low = 0;
    long high = 1;
    long step = 1;
};

template <typename T>
struct CategoricalDim {
    std::vector<T> choices;
};

/// Bounded hyperparameter space. Dimension order in the unit cube is fixed:
/// learning_rate, num_filters, kernel_size, batch_size, dropout_rate,
/// epochs, regularization, optimizer.
struct SearchSpace {
    static constexpr std::size_t kDimensions = 8;

    ContinuousDim learning_rate{1e-4, 1e-1, true};
    IntegerDim num_filters{8, 64, 1};
    IntegerDim kernel_size{1, 7, 2};
    IntegerDim batch_size{8, 64, 1};
    ContinuousDim dropout_rate{0.0, 0.5, false};
    IntegerDim epochs{10, 100, 1};
    CategoricalDim<Regularization> regularization{
        {Regularization::L1, Regularization::L2, Regularization::None}};
    CategoricalDim<OptimizerKind> optimizer{
        {OptimizerKind::Adam, OptimizerKind::RMSProp, OptimizerKind::SGD}};

    /// Throws std::invalid_argument when a bound is inverted or a choice
    /// list is empty.
    void validate() const;

    /// Maps a point of [0,1]^8 to typed hyperparameters. Throws
    /// std::out_of_range for points outside the cube.
    HyperParams decode(std::span<const double> point) const;
    /// Inverse of decode for assignments that lie on the space's grid.
    std::vector<double> encode(const HyperParams& hp) const;
    /// Every field within its [low, high] range or choice list.
    bool contains(const HyperParams& hp) const;
};

// ---------------------------------------------------------------------------
// Candidate evaluation

/// Fitness to maximize for a unit-cube point. `seed` is derived from the
/// run's master seed and the candidate's global index.
using Objective = std::function<double(std::span<const double> point, std::uint64_t seed)>;

/// Evaluates batches of candidates, optionally on several threads. Results
/// depend only on the master seed and candidate order, never on the
/// thread count. Non-finite fitness becomes -inf and is counted as flagged.
class CandidateEvaluator {
public:
    CandidateEvaluator(Objective objective, std::uint64_t master_seed, std::size_t threads = 1);

    std::vector<double> evaluate(const std::vector<std::vector<double>>& points);

    std::size_t evaluations() const { return next_index_; }
    std::size_t flagged() const { return flagged_; }

private:
    Objective objective_;
    std::uint64_t master_seed_;
    std::size_t threads_;
    std::size_t next_index_ = 0;
    std::size_t flagged_ = 0;
};

// ---------------------------------------------------------------------------
// Particle swarm

struct PsoCoefficients {
    double inertia = 0.729;
    double cognitive = 1.49445;
    double social = 1.49445;
    double velocity_clamp = 0.2;
};

struct Particle {
    std::vector<double> position;
    std::vector<double> velocity;
    std::vector<double> best_position;
    double fitness = -std::numeric_limits<double>::infinity();
    double best_fitness = -std::numeric_limits<double>::infinity();
};

struct Swarm {
    std::vector<Particle> particles;
    std::vector<double> best_position;
    double best_fitness = -std::numeric_limits<double>::infinity();
    std::size_t iteration = 0;
    PsoCoefficients coefficients;
};

/// v <- w v + c1 r1 (pbest - x) + c2 r2 (gbest - x), clamped per dimension;
/// x <- x + v, reflected back into [0,1] (velocity sign flips on reflection).
void move_particle(Particle& particle, std::span<const double> global_best,
                   const PsoCoefficients& coefficients, double r1, double r2);

/// Random positions and velocities; `seeds` overwrite the first positions.
/// Evaluates the initial swarm and sets personal and global bests.
Swarm pso_initialize(std::size_t dimensions, std::size_t population, CandidateEvaluator& evaluator,
                     Rng& rng, const PsoCoefficients& coefficients = {},
                     const std::vector<std::vector<double>>& seeds = {});

/// One synchronous iteration: move every particle with fresh r1, r2, then
/// evaluate and update personal and global bests.
Swarm pso_step(Swarm swarm, CandidateEvaluator& evaluator, Rng& rng);

struct SearchOptions {
    std::size_t population = 30;
    std::size_t max_iterations = 200;
    std::uint64_t seed = 0;
    /// Stop once the best fitness improves by less than this over the last
    /// `plateau_window` iterations.
    double convergence_tolerance = 1e-12;
    std::size_t plateau_window = 10;
    std::size_t threads = 1;
    /// Unit-cube points placed in the initial population.
    std::vector<std::vector<double>> initial_points;
};

struct SearchResult {
    std::vector<double> best_point;
    double best_fitness = -std::numeric_limits<double>::infinity();
    /// Best fitness after initialization and after every iteration.
    std::vector<double> trace;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    std::size_t flagged = 0;
};

SearchResult pso_optimize(std::size_t dimensions, const Objective& objective,
                          const SearchOptions& options, const PsoCoefficients& coefficients = {});

// ---------------------------------------------------------------------------
// Genetic algorithm

/// F = 1 / (1 + loss). Throws std::invalid_argument for negative or NaN loss.
double ga_fitness(double loss);

struct GaSettings {
    std::size_t tournament_size = 2;
    double crossover_probability = 0.9;
    double swap_probability = 0.5;
    double mutation_probability = 0.1;
    double mutation_sigma = 0.1;
    std::size_t elite_count = 1;
};

struct Individual {
    std::vector<double> genes;
    double fitness = -std::numeric_limits<double>::infinity();
};

struct GaPopulation {
    std::vector<Individual> individuals;
    std::size_t generation = 0;
    GaSettings settings;

    const Individual& best() const;
};

GaPopulation ga_initialize(std::size_t dimensions, std::size_t population,
                           CandidateEvaluator& evaluator, Rng& rng, const GaSettings& settings = {},
                           const std::vector<std::vector<double>>& seeds = {});

/// Per-gene swap with probability `swap_probability`; returns both children.
std::pair<std::vector<double>, std::vector<double>> uniform_crossover(
    std::span<const double> a, std::span<const double> b, double swap_probability, Rng& rng);

/// Elites copied unchanged, the rest bred by tournament selection, uniform
/// crossover, and clamped Gaussian mutation, then evaluated.
GaPopulation ga_generation(GaPopulation population, CandidateEvaluator& evaluator, Rng& rng);

SearchResult ga_optimize(std::size_t dimensions, const Objective& objective,
                         const SearchOptions& options, const GaSettings& settings = {});

// ---------------------------------------------------------------------------
// Composite objective

struct CompositeInputs {
    double true_positives = 0.0;          // sum over classes
    double true_plus_false_negatives = 0.0;
    std::vector<double> class_feature_variance;
    std::vector<double> normalized_thetas;  // each in (0, 1]
    std::vector<double> costs;              // each > 1
};

/// Z = alpha * recall * exp(-lambda * mean Var(f)) + beta * prod(1/theta) * prod(log C),
/// the second term evaluated in log space.
double composite_objective(const CompositeInputs& in, double alpha, double beta, double lambda);

}  // namespace geofuse
