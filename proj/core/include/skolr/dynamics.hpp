#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "skolr/tensor.hpp"

namespace skolr {

enum class SystemKind { Pendulum, Duffing, LotkaVolterra, Lorenz63 };

std::string to_string(SystemKind kind);
/// Accepts pendulum, duffing, lotka_volterra (or lotka-volterra), lorenz63 (or lorenz).
SystemKind parse_system(const std::string& name);
std::size_t state_dim(SystemKind kind);
std::vector<std::string> state_names(SystemKind kind);

struct SystemSpec {
    SystemKind kind = SystemKind::Pendulum;
    std::vector<std::pair<std::string, double>> params;  // ordered as written to file headers
    double dt = 0.01;
    std::size_t steps = 20000;
    std::uint64_t seed = 0;

    /// Default parameters: pendulum g=9.81 l=1; Duffing alpha=1 beta=5 delta=0.3 gamma=8 omega=0.5;
    /// Lotka-Volterra alpha=1.1 beta=0.4 delta=0.1 gamma=0.4; Lorenz sigma=10 rho=28 beta=8/3.
    /// dt is 0.01 except for the pendulum, which uses 0.001.
    static SystemSpec defaults(SystemKind kind);
    double param(const std::string& name) const;
    void set_param(const std::string& name, double value);
    void validate() const;
};

/// One explicit Euler step: state + dt * f(state, t). Throws NumericError on non-finite input.
std::vector<double> euler_step(const std::vector<double>& state, const SystemSpec& spec, double t);

/// Initial conditions drawn from the seeded generator.
std::vector<double> initial_state(const SystemSpec& spec);

struct Trajectory {
    Tensor states;  // steps x dim; row 0 is the initial condition
    SystemSpec spec;
};

/// Deterministic in the seed. Throws NumericError naming the step where the state stopped being finite.
Trajectory generate(const SystemSpec& spec);

struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct SplitRanges {
    IndexRange train, val, test;
};

/// 70/10/20 contiguous split (14000/2000/4000 for 20000 steps). ConfigError below 100 steps.
SplitRanges split(std::size_t steps);
inline SplitRanges split(const Trajectory& traj) { return split(traj.states.rows()); }

/// "# system=<kind> dt=<dt> seed=<seed> params=<k=v;...> rng=<algorithm>", a column header, then one row per step.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
std::string trajectory_header(const SystemSpec& spec);

}  // namespace skolr
