#pragma once

#include "anderson/model_params.hpp"
#include "anderson/spectral_noise.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace anderson {

struct SpaceTimePoint {
    double t = 1.0;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
};

struct SamplerConfig {
    // Largest number of cell tuples (cells^k) the direct sum may visit for one
    // point. Cells per axis that fit with the default budget:
    //   k = 2: d = 1 ~ 44x44, d = 2 ~ 12^3
    //   k = 3: d = 1 ~ 12x12, d = 2 ~ 5^3
    double tuple_budget = 4.0e6;
    // d = 1 and k <= 2 use the factorized evaluation unless disabled.
    bool allow_fast = true;
    // Chebyshev nodes in time for the factorized k = 2 path; 0 picks from the
    // lattice band limit.
    int time_nodes = 0;
    int threads = 0;
};

// Evaluates the off-diagonal discrete chaoses I_1 .. I_m of every theta at
// every point for one noise draw. Everything that does not depend on the draw
// is precomputed in the constructor.
class ChaosSampler {
public:
    ChaosSampler(const Lattice& lattice, std::vector<NoiseParam> thetas, Equation eq,
                 std::vector<SpaceTimePoint> points, int m, const SamplerConfig& cfg = {});
    ~ChaosSampler();
    ChaosSampler(ChaosSampler&&) noexcept;
    ChaosSampler& operator=(ChaosSampler&&) noexcept;

    // out[((k-1) * thetas + theta) * points + point] = I_k
    void sample(const NoiseDraw& draw, std::vector<double>& out) const;

    int order() const;
    std::size_t theta_count() const;
    std::size_t point_count() const;
    bool factorized() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Off-diagonal discrete k-fold integral; k <= 3.
double discrete_multiple_integral(const NoiseDraw& draw, const NoiseParam& p, Equation eq, double t,
                                  const Eigen::VectorXd& x, int k, const SamplerConfig& cfg = {});

// 1 + sum_{k <= m} I_k; m <= 3.
double truncated_solution(const NoiseDraw& draw, const NoiseParam& p, Equation eq, double t, const Eigen::VectorXd& x,
                          int m, const SamplerConfig& cfg = {});

struct EnsembleTable {
    std::vector<NoiseParam> thetas;
    std::vector<SpaceTimePoint> points;
    int m = 0;
    std::vector<std::uint64_t> seeds;
    // u_m, indexed (seed, theta, point)
    std::vector<double> samples;
    // I_k, indexed (k - 1, seed, theta, point)
    std::vector<double> chaos;

    std::size_t index(std::size_t seed, std::size_t theta, std::size_t point) const {
        return (seed * thetas.size() + theta) * points.size() + point;
    }
    double value(std::size_t seed, std::size_t theta, std::size_t point) const {
        return samples[index(seed, theta, point)];
    }
    double chaos_value(int k, std::size_t seed, std::size_t theta, std::size_t point) const {
        return chaos[static_cast<std::size_t>(k - 1) * samples.size() + index(seed, theta, point)];
    }
};

// One draw per seed, shared by every theta.
EnsembleTable coupled_ensemble(const std::vector<std::uint64_t>& seeds, const std::vector<NoiseParam>& thetas,
                               Equation eq, const std::vector<SpaceTimePoint>& points, int m, const Lattice& lattice,
                               const SamplerConfig& cfg = {});

enum class Direction { Time, Space };

struct IncrementStat {
    double lag = 0.0;
    double p = 2.0;
    double estimate = 0.0;
    double std_error = 0.0;
};

// Mean over seeds of the overlapping-pair average of |u(z + lag) - u(z)|^p
// along the transect, one entry per lag, jackknife standard errors.
std::vector<IncrementStat> increment_moments(const EnsembleTable& table, Direction dir, double p,
                                             std::size_t theta = 0);

// CSV `seed,theta,t,x,value`; `comment` (if nonempty) is written first as "# comment".
void write_ensemble_csv(std::ostream& os, const EnsembleTable& table, const std::string& comment = {});

}  // namespace anderson
