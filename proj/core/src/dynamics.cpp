#include "skolr/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "skolr/data.hpp"
#include "skolr/error.hpp"
#include "skolr/rng.hpp"

namespace skolr {

std::string to_string(SystemKind kind)
{
    switch (kind) {
    case SystemKind::Pendulum: return "pendulum";
    case SystemKind::Duffing: return "duffing";
    case SystemKind::LotkaVolterra: return "lotka_volterra";
    case SystemKind::Lorenz63: return "lorenz63";
    }
    return "unknown";
}

SystemKind parse_system(const std::string& name)
{
    std::string n = name;
    std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (n == "pendulum") return SystemKind::Pendulum;
    if (n == "duffing") return SystemKind::Duffing;
    if (n == "lotka_volterra" || n == "lotka-volterra" || n == "lotkavolterra") return SystemKind::LotkaVolterra;
    if (n == "lorenz63" || n == "lorenz" || n == "lorenz-63") return SystemKind::Lorenz63;
    throw ConfigError("unknown system '" + name + "' (expected pendulum, duffing, lotka_volterra or lorenz63)");
}

std::size_t state_dim(SystemKind kind) { return kind == SystemKind::Lorenz63 ? 3 : 2; }

std::vector<std::string> state_names(SystemKind kind)
{
    switch (kind) {
    case SystemKind::Pendulum: return {"theta", "omega"};
    case SystemKind::Duffing: return {"x", "y"};
    case SystemKind::LotkaVolterra: return {"prey", "predator"};
    case SystemKind::Lorenz63: return {"x", "y", "z"};
    }
    return {};
}

SystemSpec SystemSpec::defaults(SystemKind kind)
{
    SystemSpec s;
    s.kind = kind;
    switch (kind) {
    case SystemKind::Pendulum:
        // Explicit Euler gains energy by about (1 + (g/l) dt^2) per step; at 0.01 the swing turns into
        // unbounded rotation well before 20000 steps.
        s.params = {{"g", 9.81}, {"l", 1.0}};
        s.dt = 0.001;
        break;
    case SystemKind::Duffing:
        s.params = {{"alpha", 1.0}, {"beta", 5.0}, {"delta", 0.3}, {"gamma", 8.0}, {"omega", 0.5}};
        break;
    case SystemKind::LotkaVolterra: s.params = {{"alpha", 1.1}, {"beta", 0.4}, {"delta", 0.1}, {"gamma", 0.4}}; break;
    case SystemKind::Lorenz63: s.params = {{"sigma", 10.0}, {"rho", 28.0}, {"beta", 8.0 / 3.0}}; break;
    }
    return s;
}

double SystemSpec::param(const std::string& name) const
{
    for (const auto& [k, v] : params)
        if (k == name) return v;
    throw ConfigError("system " + to_string(kind) + " has no parameter '" + name + "'");
}

void SystemSpec::set_param(const std::string& name, double value)
{
    for (auto& [k, v] : params)
        if (k == name) {
            v = value;
            return;
        }
    throw ConfigError("system " + to_string(kind) + " has no parameter '" + name + "'");
}

void SystemSpec::validate() const
{
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step dt must be positive");
    if (steps < 1) throw ConfigError("steps must be at least 1");
}

std::vector<double> euler_step(const std::vector<double>& state, const SystemSpec& spec, double t)
{
    if (state.size() != state_dim(spec.kind))
        throw DimensionError(to_string(spec.kind) + " state has " + std::to_string(state_dim(spec.kind)) +
                             " components, got " + std::to_string(state.size()));
    for (double v : state)
        if (!std::isfinite(v)) throw NumericError("non-finite state passed to euler_step");

    const double dt = spec.dt;
    switch (spec.kind) {
    case SystemKind::Pendulum: {
        const double theta = state[0], omega = state[1];
        const double accel = -(spec.param("g") / spec.param("l")) * std::sin(theta);
        return {theta + dt * omega, omega + dt * accel};
    }
    case SystemKind::Duffing: {
        const double x = state[0], y = state[1];
        const double accel = spec.param("gamma") * std::cos(spec.param("omega") * t) - spec.param("delta") * y -
                             spec.param("alpha") * x - spec.param("beta") * x * x * x;
        return {x + dt * y, y + dt * accel};
    }
    case SystemKind::LotkaVolterra: {
        const double prey = state[0], pred = state[1];
        const double dprey = spec.param("alpha") * prey - spec.param("beta") * prey * pred;
        const double dpred = spec.param("delta") * prey * pred - spec.param("gamma") * pred;
        return {prey + dt * dprey, pred + dt * dpred};
    }
    case SystemKind::Lorenz63: {
        const double x = state[0], y = state[1], z = state[2];
        const double dx = spec.param("sigma") * (y - x);
        const double dy = x * (spec.param("rho") - z) - y;
        const double dz = x * y - spec.param("beta") * z;
        return {x + dt * dx, y + dt * dy, z + dt * dz};
    }
    }
    throw ConfigError("unsupported system");
}

std::vector<double> initial_state(const SystemSpec& spec)
{
    Rng rng(spec.seed);
    switch (spec.kind) {
    case SystemKind::Pendulum: {
        const double theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
        const double omega = rng.uniform(-1.0, 1.0);
        return {theta, omega};
    }
    case SystemKind::Duffing: {
        const double x = rng.uniform(-0.1, 0.1);
        const double y = rng.uniform(-0.1, 0.1);
        return {x, y};
    }
    case SystemKind::LotkaVolterra: {
        const double prey = rng.uniform(0.5, 1.5);
        const double pred = rng.uniform(0.5, 1.5);
        return {prey, pred};
    }
    case SystemKind::Lorenz63: {
        const double x = rng.uniform(0.5, 1.5);
        const double y = rng.uniform(0.5, 1.5);
        const double z = rng.uniform(0.5, 1.5);
        return {x, y, z};
    }
    }
    throw ConfigError("unsupported system");
}

Trajectory generate(const SystemSpec& spec)
{
    spec.validate();
    const std::size_t dim = state_dim(spec.kind);
    Trajectory traj{Tensor({spec.steps, dim}), spec};
    std::vector<double> state = initial_state(spec);
    for (std::size_t i = 0; i < spec.steps; ++i) {
        if (i > 0) {
            state = euler_step(state, spec, static_cast<double>(i - 1) * spec.dt);
            for (double v : state)
                if (!std::isfinite(v))
                    throw NumericError(to_string(spec.kind) + " simulation diverged at step " + std::to_string(i));
        }
        std::copy(state.begin(), state.end(), traj.states.storage().begin() + static_cast<std::ptrdiff_t>(i * dim));
    }
    return traj;
}

SplitRanges split(std::size_t steps)
{
    if (steps < 100) throw ConfigError("trajectory split needs at least 100 steps, got " + std::to_string(steps));
    const auto ranges = split_rows(steps, {7.0, 1.0, 2.0});
    return ranges;
}

std::string trajectory_header(const SystemSpec& spec)
{
    std::string params;
    for (const auto& [k, v] : spec.params) params += (params.empty() ? "" : ";") + k + "=" + format_double(v);
    return "# system=" + to_string(spec.kind) + " dt=" + format_double(spec.dt) + " seed=" + std::to_string(spec.seed) +
           " params=" + params + " rng=" + std::string(Rng::algorithm);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj)
{
    out << trajectory_header(traj.spec) << '\n';
    const auto names = state_names(traj.spec.kind);
    for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
    out << '\n';
    write_rows(out, traj.states);
}

}  // namespace skolr
