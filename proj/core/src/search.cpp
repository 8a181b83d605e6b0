#include "geofuse/search.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

namespace geofuse {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double decode_continuous(const ContinuousDim& d, double u) {
    if (u <= 0.0) return d.low;
    if (u >= 1.0) return d.high;
    double v;
    if (d.log_scale) {
        const double lo = std::log(d.low);
        const double hi = std::log(d.high);
        v = std::exp(lo + u * (hi - lo));
    } else {
        v = d.low + u * (d.high - d.low);
    }
    return std::clamp(v, d.low, d.high);
}

double encode_continuous(const ContinuousDim& d, double v) {
    double u;
    if (d.log_scale) {
        u = (std::log(v) - std::log(d.low)) / (std::log(d.high) - std::log(d.low));
    } else {
        u = (v - d.low) / (d.high - d.low);
    }
    return std::clamp(u, 0.0, 1.0);
}

long decode_integer(const IntegerDim& d, double u) {
    const double offset = u * static_cast<double>(d.high - d.low) / static_cast<double>(d.step);
    const long steps = static_cast<long>(std::floor(offset + 0.5));  // round half up
    return std::min(d.high, d.low + steps * d.step);
}

double encode_integer(const IntegerDim& d, long v) {
    return std::clamp(static_cast<double>(v - d.low) / static_cast<double>(d.high - d.low), 0.0, 1.0);
}

template <typename T>
const T& decode_choice(const CategoricalDim<T>& d, double u) {
    const auto n = d.choices.size();
    const auto idx = std::min(n - 1, static_cast<std::size_t>(std::floor(u * static_cast<double>(n))));
    return d.choices[idx];
}

template <typename T>
double encode_choice(const CategoricalDim<T>& d, const T& value) {
    const auto it = std::find(d.choices.begin(), d.choices.end(), value);
    if (it == d.choices.end()) throw std::invalid_argument("value not among the dimension's choices");
    const auto idx = static_cast<double>(std::distance(d.choices.begin(), it));
    return (idx + 0.5) / static_cast<double>(d.choices.size());
}

bool integer_in(const IntegerDim& d, std::size_t v) {
    const long x = static_cast<long>(v);
    return x >= d.low && x <= d.high && (x - d.low) % d.step == 0;
}

void check_continuous(const ContinuousDim& d, const char* name) {
    if (!(d.low < d.high)) throw std::invalid_argument(std::string(name) + ": low must be < high");
    if (d.log_scale && !(d.low > 0.0)) {
        throw std::invalid_argument(std::string(name) + ": log-scaled bounds must be positive");
    }
}

void check_integer(const IntegerDim& d, const char* name) {
    if (!(d.low < d.high)) throw std::invalid_argument(std::string(name) + ": low must be < high");
    if (d.step <= 0 || (d.high - d.low) % d.step != 0) {
        throw std::invalid_argument(std::string(name) + ": step must divide the range");
    }
}

}  // namespace

void SearchSpace::validate() const {
    check_continuous(learning_rate, "learning_rate");
    check_integer(num_filters, "num_filters");
    check_integer(kernel_size, "kernel_size");
    check_integer(batch_size, "batch_size");
    check_continuous(dropout_rate, "dropout_rate");
    check_integer(epochs, "epochs");
    if (num_filters.low < 1 || batch_size.low < 1 || epochs.low < 1) {
        throw std::invalid_argument("integer hyperparameters must have positive lower bounds");
    }
    if (kernel_size.low < 1 || kernel_size.low % 2 == 0 || kernel_size.step % 2 != 0) {
        throw std::invalid_argument("kernel_size grid must contain only odd sizes");
    }
    if (dropout_rate.low < 0.0 || dropout_rate.high >= 1.0) {
        throw std::invalid_argument("dropout_rate bounds must lie in [0, 1)");
    }
    if (regularization.choices.empty() || optimizer.choices.empty()) {
        throw std::invalid_argument("categorical dimensions need at least one choice");
    }
}

HyperParams SearchSpace::decode(std::span<const double> point) const {
    if (point.size() != kDimensions) {
        throw std::invalid_argument("search point has " + std::to_string(point.size()) +
                                    " dimensions, expected " + std::to_string(kDimensions));
    }
    for (std::size_t i = 0; i < point.size(); ++i) {
        if (!(point[i] >= 0.0 && point[i] <= 1.0)) {
            throw std::out_of_range("search point coordinate " + std::to_string(i) +
                                    " outside [0, 1]: " + std::to_string(point[i]));
        }
    }
    HyperParams hp;
    hp.learning_rate = decode_continuous(learning_rate, point[0]);
    hp.num_filters = static_cast<std::size_t>(decode_integer(num_filters, point[1]));
    hp.kernel_size = static_cast<std::size_t>(decode_integer(kernel_size, point[2]));
    hp.batch_size = static_cast<std::size_t>(decode_integer(batch_size, point[3]));
    hp.dropout_rate = decode_continuous(dropout_rate, point[4]);
    hp.epochs = static_cast<std::size_t>(decode_integer(epochs, point[5]));
    hp.regularization = decode_choice(regularization, point[6]);
    hp.optimizer = decode_choice(optimizer, point[7]);
    return hp;
}

std::vector<double> SearchSpace::encode(const HyperParams& hp) const {
    return {encode_continuous(learning_rate, hp.learning_rate),
            encode_integer(num_filters, static_cast<long>(hp.num_filters)),
            encode_integer(kernel_size, static_cast<long>(hp.kernel_size)),
            encode_integer(batch_size, static_cast<long>(hp.batch_size)),
            encode_continuous(dropout_rate, hp.dropout_rate),
            encode_integer(epochs, static_cast<long>(hp.epochs)),
            encode_choice(regularization, hp.regularization),
            encode_choice(optimizer, hp.optimizer)};
}

bool SearchSpace::contains(const HyperParams& hp) const {
    auto in_range = [](const ContinuousDim& d, double v) { return v >= d.low && v <= d.high; };
    const auto& regs = regularization.choices;
    const auto& opts = optimizer.choices;
    return in_range(learning_rate, hp.learning_rate) && integer_in(num_filters, hp.num_filters) &&
           integer_in(kernel_size, hp.kernel_size) && integer_in(batch_size, hp.batch_size) &&
           in_range(dropout_rate, hp.dropout_rate) && integer_in(epochs, hp.epochs) &&
           std::find(regs.begin(), regs.end(), hp.regularization) != regs.end() &&
           std::find(opts.begin(), opts.end(), hp.optimizer) != opts.end();
}

// ---------------------------------------------------------------------------

CandidateEvaluator::CandidateEvaluator(Objective objective, std::uint64_t master_seed,
                                       std::size_t threads)
    : objective_(std::move(objective)), master_seed_(master_seed), threads_(std::max<std::size_t>(1, threads)) {}

std::vector<double> CandidateEvaluator::evaluate(const std::vector<std::vector<double>>& points) {
    const std::size_t n = points.size();
    std::vector<double> out(n, kNegInf);
    const std::size_t base = next_index_;

    auto run = [&](std::size_t i) {
        double f;
        try {
            f = objective_(points[i], derive_seed(master_seed_, base + i));
        } catch (const std::exception&) {
            f = kNegInf;
        }
        out[i] = std::isfinite(f) ? f : kNegInf;
    };

    const std::size_t workers = std::min(threads_, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) run(i);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < n; i += workers) run(i);
            });
        }
        for (auto& t : pool) t.join();
    }
    next_index_ += n;
    flagged_ += static_cast<std::size_t>(std::count(out.begin(), out.end(), kNegInf));
    return out;
}

// ---------------------------------------------------------------------------
// PSO

void move_particle(Particle& p, std::span<const double> global_best, const PsoCoefficients& c,
                   double r1, double r2) {
    for (std::size_t d = 0; d < p.position.size(); ++d) {
        double v = c.inertia * p.velocity[d] + c.cognitive * r1 * (p.best_position[d] - p.position[d]) +
                   c.social * r2 * (global_best[d] - p.position[d]);
        v = std::clamp(v, -c.velocity_clamp, c.velocity_clamp);
        double x = p.position[d] + v;
        if (x < 0.0) {
            x = -x;
            v = -v;
        } else if (x > 1.0) {
            x = 2.0 - x;
            v = -v;
        }
        p.position[d] = std::clamp(x, 0.0, 1.0);
        p.velocity[d] = v;
    }
}

namespace {

void update_bests(Swarm& swarm, const std::vector<double>& fitness) {
    for (std::size_t i = 0; i < swarm.particles.size(); ++i) {
        Particle& p = swarm.particles[i];
        p.fitness = fitness[i];
        if (p.fitness > p.best_fitness || p.best_position.empty()) {
            p.best_fitness = p.fitness;
            p.best_position = p.position;
        }
        if (p.best_fitness > swarm.best_fitness || swarm.best_position.empty()) {
            swarm.best_fitness = p.best_fitness;
            swarm.best_position = p.best_position;
        }
    }
}

std::vector<std::vector<double>> positions(const Swarm& swarm) {
    std::vector<std::vector<double>> out;
    out.reserve(swarm.particles.size());
    for (const auto& p : swarm.particles) out.push_back(p.position);
    return out;
}

void check_seed_point(std::span<const double> point, std::size_t dimensions) {
    if (point.size() != dimensions) throw std::invalid_argument("initial point has wrong dimension");
    for (double u : point) {
        if (!(u >= 0.0 && u <= 1.0)) throw std::out_of_range("initial point outside the unit cube");
    }
}

bool plateaued(const std::vector<double>& trace, std::size_t window, double tolerance) {
    if (window == 0 || trace.size() <= window) return false;
    const double recent = trace.back();
    const double before = trace[trace.size() - 1 - window];
    if (!std::isfinite(recent) || !std::isfinite(before)) return false;
    return recent - before < tolerance;
}

}  // namespace

Swarm pso_initialize(std::size_t dimensions, std::size_t population, CandidateEvaluator& evaluator,
                     Rng& rng, const PsoCoefficients& coefficients,
                     const std::vector<std::vector<double>>& seeds) {
    if (dimensions == 0) throw std::invalid_argument("pso needs at least one dimension");
    if (population == 0) throw std::invalid_argument("pso needs a non-empty swarm");
    Swarm swarm;
    swarm.coefficients = coefficients;
    swarm.particles.resize(population);
    for (std::size_t i = 0; i < population; ++i) {
        Particle& p = swarm.particles[i];
        p.position.resize(dimensions);
        p.velocity.resize(dimensions);
        for (std::size_t d = 0; d < dimensions; ++d) {
            p.position[d] = rng.uniform();
            p.velocity[d] = rng.uniform(-coefficients.velocity_clamp, coefficients.velocity_clamp);
        }
        if (i < seeds.size()) {
            check_seed_point(seeds[i], dimensions);
            p.position = seeds[i];
        }
    }
    update_bests(swarm, evaluator.evaluate(positions(swarm)));
    return swarm;
}

Swarm pso_step(Swarm swarm, CandidateEvaluator& evaluator, Rng& rng) {
    if (swarm.particles.empty()) throw std::invalid_argument("pso_step on an empty swarm");
    const std::vector<double> global_best = swarm.best_position;
    for (Particle& p : swarm.particles) {
        const double r1 = rng.uniform();
        const double r2 = rng.uniform();
        move_particle(p, global_best, swarm.coefficients, r1, r2);
    }
    update_bests(swarm, evaluator.evaluate(positions(swarm)));
    ++swarm.iteration;
    return swarm;
}

SearchResult pso_optimize(std::size_t dimensions, const Objective& objective,
                          const SearchOptions& options, const PsoCoefficients& coefficients) {
    if (options.population < 2) throw std::invalid_argument("pso population must be >= 2");
    if (options.max_iterations < 1) throw std::invalid_argument("pso needs at least one iteration");
    CandidateEvaluator evaluator(objective, options.seed, options.threads);
    Rng rng(derive_seed(options.seed, "pso"));
    Swarm swarm = pso_initialize(dimensions, options.population, evaluator, rng, coefficients,
                                 options.initial_points);
    SearchResult result;
    result.trace.push_back(swarm.best_fitness);
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        swarm = pso_step(std::move(swarm), evaluator, rng);
        result.trace.push_back(swarm.best_fitness);
        if (plateaued(result.trace, options.plateau_window, options.convergence_tolerance)) break;
    }
    result.best_point = swarm.best_position;
    result.best_fitness = swarm.best_fitness;
    result.iterations = swarm.iteration;
    result.evaluations = evaluator.evaluations();
    result.flagged = evaluator.flagged();
    return result;
}

// ---------------------------------------------------------------------------
// GA

double ga_fitness(double loss) {
    if (!(loss >= 0.0)) throw std::invalid_argument("ga_fitness: loss must be >= 0");
    return 1.0 / (1.0 + loss);
}

const Individual& GaPopulation::best() const {
    if (individuals.empty()) throw std::logic_error("empty GA population");
    return *std::max_element(individuals.begin(), individuals.end(),
                             [](const Individual& a, const Individual& b) { return a.fitness < b.fitness; });
}

GaPopulation ga_initialize(std::size_t dimensions, std::size_t population,
                           CandidateEvaluator& evaluator, Rng& rng, const GaSettings& settings,
                           const std::vector<std::vector<double>>& seeds) {
    if (dimensions == 0) throw std::invalid_argument("ga needs at least one dimension");
    if (population < 2) throw std::invalid_argument("ga population must be >= 2");
    GaPopulation pop;
    pop.settings = settings;
    std::vector<std::vector<double>> genes(population, std::vector<double>(dimensions));
    for (std::size_t i = 0; i < population; ++i) {
        for (double& g : genes[i]) g = rng.uniform();
        if (i < seeds.size()) {
            check_seed_point(seeds[i], dimensions);
            genes[i] = seeds[i];
        }
    }
    const auto fitness = evaluator.evaluate(genes);
    for (std::size_t i = 0; i < population; ++i) pop.individuals.push_back({genes[i], fitness[i]});
    return pop;
}

std::pair<std::vector<double>, std::vector<double>> uniform_crossover(
    std::span<const double> a, std::span<const double> b, double swap_probability, Rng& rng) {
    if (a.size() != b.size()) throw std::invalid_argument("crossover parents differ in length");
    std::vector<double> c1(a.begin(), a.end());
    std::vector<double> c2(b.begin(), b.end());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (rng.uniform() < swap_probability) std::swap(c1[i], c2[i]);
    }
    return {std::move(c1), std::move(c2)};
}

namespace {

const Individual& tournament(const std::vector<Individual>& pool, std::size_t size, Rng& rng) {
    const Individual* best = &pool[rng.below(pool.size())];
    for (std::size_t k = 1; k < size; ++k) {
        const Individual& contender = pool[rng.below(pool.size())];
        if (contender.fitness > best->fitness) best = &contender;
    }
    return *best;
}

void mutate(std::vector<double>& genes, const GaSettings& s, Rng& rng) {
    for (double& g : genes) {
        if (rng.uniform() < s.mutation_probability) {
            g = std::clamp(g + rng.normal(0.0, s.mutation_sigma), 0.0, 1.0);
        }
    }
}

}  // namespace

GaPopulation ga_generation(GaPopulation pop, CandidateEvaluator& evaluator, Rng& rng) {
    const std::size_t size = pop.individuals.size();
    if (size < 2) throw std::invalid_argument("ga_generation needs a population of at least 2");
    const GaSettings& s = pop.settings;
    const std::size_t elites = std::min(s.elite_count, size);

    std::vector<Individual> ranked = pop.individuals;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Individual& a, const Individual& b) { return a.fitness > b.fitness; });

    std::vector<Individual> next(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(elites));
    std::vector<std::vector<double>> offspring;
    const std::size_t tsize = std::max<std::size_t>(1, s.tournament_size);
    while (next.size() + offspring.size() < size) {
        const Individual& p1 = tournament(pop.individuals, tsize, rng);
        const Individual& p2 = tournament(pop.individuals, tsize, rng);
        std::vector<double> c1 = p1.genes;
        std::vector<double> c2 = p2.genes;
        if (rng.uniform() < s.crossover_probability) {
            std::tie(c1, c2) = uniform_crossover(p1.genes, p2.genes, s.swap_probability, rng);
        }
        mutate(c1, s, rng);
        mutate(c2, s, rng);
        offspring.push_back(std::move(c1));
        if (next.size() + offspring.size() < size) offspring.push_back(std::move(c2));
    }
    const auto fitness = evaluator.evaluate(offspring);
    for (std::size_t i = 0; i < offspring.size(); ++i) next.push_back({std::move(offspring[i]), fitness[i]});

    pop.individuals = std::move(next);
    ++pop.generation;
    return pop;
}

SearchResult ga_optimize(std::size_t dimensions, const Objective& objective,
                         const SearchOptions& options, const GaSettings& settings) {
    if (options.max_iterations < 1) throw std::invalid_argument("ga needs at least one generation");
    CandidateEvaluator evaluator(objective, options.seed, options.threads);
    Rng rng(derive_seed(options.seed, "ga"));
    GaPopulation pop =
        ga_initialize(dimensions, options.population, evaluator, rng, settings, options.initial_points);
    SearchResult result;
    result.trace.push_back(pop.best().fitness);
    for (std::size_t gen = 0; gen < options.max_iterations; ++gen) {
        pop = ga_generation(std::move(pop), evaluator, rng);
        result.trace.push_back(pop.best().fitness);
        if (plateaued(result.trace, options.plateau_window, options.convergence_tolerance)) break;
    }
    const Individual& best = pop.best();
    result.best_point = best.genes;
    result.best_fitness = best.fitness;
    result.iterations = pop.generation;
    result.evaluations = evaluator.evaluations();
    result.flagged = evaluator.flagged();
    return result;
}

// ---------------------------------------------------------------------------

double composite_objective(const CompositeInputs& in, double alpha, double beta, double lambda) {
    if (!(in.true_plus_false_negatives > 0.0)) {
        throw std::invalid_argument("composite objective: no positives to compute recall over");
    }
    double first = 0.0;
    if (alpha != 0.0) {
        double variance = 0.0;
        if (!in.class_feature_variance.empty()) {
            for (double v : in.class_feature_variance) variance += v;
            variance /= static_cast<double>(in.class_feature_variance.size());
        }
        const double recall = in.true_positives / in.true_plus_false_negatives;
        first = alpha * recall * (lambda == 0.0 ? 1.0 : std::exp(-lambda * variance));
    }
    for (double t : in.normalized_thetas) {
        if (!(t > 0.0)) throw std::invalid_argument("composite objective: normalized theta must be > 0");
    }
    for (double c : in.costs) {
        if (!(c > 1.0)) throw std::invalid_argument("composite objective: cost must be > 1");
    }
    double second = 0.0;
    if (beta != 0.0) {
        double log_term = 0.0;
        for (double t : in.normalized_thetas) log_term -= std::log(t);
        for (double c : in.costs) log_term += std::log(std::log(c));
        second = beta * std::exp(log_term);
    }
    return first + second;
}

}  // namespace geofuse
