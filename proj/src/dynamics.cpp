#include "qnet/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

namespace qnet {

double DriveSpec::alpha(double t, double gamma_r) const {
    if (constant()) {
        if (omega_rabi == 0.0) return 0.0;
        if (gamma_r <= 0.0) {
            throw std::invalid_argument("DriveSpec: gamma_r must be > 0 for a Rabi drive");
        }
        return omega_rabi / std::sqrt(gamma_r);
    }
    if (t <= times.front() || t >= times.back()) {
        return 0.0;
    }
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const size_t hi = static_cast<size_t>(it - times.begin());
    const size_t lo = hi - 1;
    const double w = (t - times[lo]) / (times[hi] - times[lo]);
    return alphas[lo] + w * (alphas[hi] - alphas[lo]);
}

DriveSpec DriveSpec::sampled_alpha(std::vector<double> ts, std::vector<double> amps) {
    if (ts.size() != amps.size() || ts.size() < 2) {
        throw std::invalid_argument("DriveSpec: sampled table needs matching sizes >= 2");
    }
    if (!std::is_sorted(ts.begin(), ts.end())) {
        throw std::invalid_argument("DriveSpec: sample times must increase");
    }
    for (double a : amps) {
        if (!std::isfinite(a)) throw std::invalid_argument("DriveSpec: amplitude not finite");
    }
    DriveSpec d;
    d.times = std::move(ts);
    d.alphas = std::move(amps);
    return d;
}

void NoiseSpec::validate() const {
    if (gamma_phi < 0.0 || gamma_nr < 0.0) {
        throw std::invalid_argument("NoiseSpec: rates must be >= 0");
    }
}

void MasterEquation::finalize() {
    const int d = dim();
    Matrix damping = Matrix::Zero(d, d);
    for (const Matrix& j : jumps) {
        damping += j.adjoint() * j;
    }
    h_nh0 = h0 - 0.5 * kImag * damping;
}

Matrix MasterEquation::rhs(const Matrix& rho, double t) const {
    const double a = drive.alpha(t, gamma_r);
    Matrix h_nh = h_nh0;
    if (a != 0.0) {
        // H_drive = -i alpha L_R† + i alpha* L_R, with real alpha here
        h_nh += -kImag * a * l_right.adjoint() + kImag * a * l_right;
    }
    Matrix out = -kImag * (h_nh * rho - rho * h_nh.adjoint());
    for (const Matrix& j : jumps) {
        out += j * rho * j.adjoint();
    }
    return out;
}

std::vector<Matrix> noise_jumps(const SpacePtr& space, const NoiseSpec& noise) {
    noise.validate();
    std::vector<Matrix> out;
    if (noise.gamma_phi == 0.0 && noise.gamma_nr == 0.0) return out;
    for (const auto& sub : space->subsystems()) {
        const Operator a = truncated_boson(sub.dim, sub.label);
        const Matrix a_full = embed_matrix(a.mat, *space, {space->position_of(sub.label)});
        if (noise.gamma_phi > 0.0) {
            out.push_back(std::sqrt(2.0 * noise.gamma_phi) * (a_full.adjoint() * a_full));
        }
        if (noise.gamma_nr > 0.0) {
            out.push_back(std::sqrt(noise.gamma_nr) * a_full);
        }
    }
    return out;
}

MasterEquation make_master_equation(const Operator& h_eff, const Operator& l_right,
                                    const Operator& l_left, const DriveSpec& drive,
                                    const NoiseSpec& noise, double gamma_r) {
    if (!(*h_eff.space == *l_right.space) || !(*h_eff.space == *l_left.space)) {
        throw DimensionError("make_master_equation: operator spaces do not match");
    }
    MasterEquation me;
    me.space = h_eff.space;
    me.h0 = h_eff.mat;
    me.l_right = l_right.mat;
    me.jumps = {l_right.mat, l_left.mat};
    for (Matrix& j : noise_jumps(me.space, noise)) {
        me.jumps.push_back(std::move(j));
    }
    me.drive = drive;
    me.gamma_r = gamma_r;
    me.finalize();
    return me;
}

Matrix liouvillian_apply(const Operator& h_eff, const std::vector<Operator>& jump_ops,
                         const DriveSpec& drive, const NoiseSpec& noise,
                         const DensityMatrix& rho, const Operator& l_right,
                         double gamma_r, double t) {
    if (rho.mat.rows() != h_eff.dim()) {
        throw DimensionError("liouvillian_apply: density matrix dimension mismatch");
    }
    MasterEquation me;
    me.space = h_eff.space;
    me.h0 = h_eff.mat;
    me.l_right = l_right.mat;
    for (const Operator& j : jump_ops) {
        if (j.dim() != h_eff.dim()) {
            throw DimensionError("liouvillian_apply: jump operator dimension mismatch");
        }
        me.jumps.push_back(j.mat);
    }
    for (Matrix& j : noise_jumps(me.space, noise)) {
        me.jumps.push_back(std::move(j));
    }
    me.drive = drive;
    me.gamma_r = gamma_r;
    me.finalize();
    return me.rhs(rho.mat, t);
}

Trajectory evolve(const MasterEquation& me, const DensityMatrix& rho0,
                  const std::vector<double>& t_grid,
                  const std::vector<Operator>& observables, const OdeOptions& opts) {
    if (!std::is_sorted(t_grid.begin(), t_grid.end())) {
        throw std::invalid_argument("evolve: t_grid must increase");
    }
    const int d = me.dim();
    if (rho0.mat.rows() != d) {
        throw DimensionError("evolve: initial state dimension mismatch");
    }
    auto rhs = [&](double t, const Vector& y) {
        const Eigen::Map<const Matrix> rho(y.data(), d, d);
        Matrix drho = me.rhs(rho, t);
        return Vector(Eigen::Map<Vector>(drho.data(), d * d));
    };

    Trajectory traj;
    traj.times = t_grid;
    Vector y = Eigen::Map<const Vector>(rho0.mat.data(), d * d);
    double t = t_grid.front();
    const double trace0 = rho0.mat.trace().real();
    for (size_t i = 0; i < t_grid.size(); ++i) {
        if (i > 0) {
            y = integrate_ode(rhs, y, t, t_grid[i], opts);
            t = t_grid[i];
        }
        const Eigen::Map<const Matrix> rho(y.data(), d, d);
        const double drift = std::abs(rho.trace().real() - trace0);
        traj.max_trace_drift = std::max(traj.max_trace_drift, drift);
        if (drift > 1e-6) {
            throw ConvergenceError("evolve: trace drift exceeded 1e-6");
        }
        if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-6) {
            throw ConvergenceError("evolve: hermiticity lost along the trajectory");
        }
        std::vector<Complex> row;
        row.reserve(observables.size());
        for (const Operator& op : observables) {
            row.push_back((op.mat * rho).trace());
        }
        traj.observables.push_back(std::move(row));
    }
    traj.final_state = {me.space, Eigen::Map<const Matrix>(y.data(), d, d)};
    return traj;
}

Matrix liouvillian_superoperator(const Matrix& h_nh, const std::vector<Matrix>& jumps) {
    const int d = static_cast<int>(h_nh.rows());
    const Matrix id = Matrix::Identity(d, d);
    Matrix super = -kImag * Eigen::kroneckerProduct(id, h_nh).eval();
    super += kImag * Eigen::kroneckerProduct(h_nh.conjugate(), id).eval();
    for (const Matrix& j : jumps) {
        super += Eigen::kroneckerProduct(j.conjugate(), j).eval();
    }
    return super;
}

Matrix null_space_density(const Matrix& superop, int dim, double* gap) {
    Eigen::BDCSVD<Matrix> svd(superop, Eigen::ComputeThinV);
    const auto& sigma = svd.singularValues();
    const double smax = sigma(0);
    const double tol = std::max(smax * 1e-10, 1e-300);
    int nullity = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) <= tol) ++nullity;
    }
    if (nullity == 0) {
        throw ConvergenceError("null_space_density: no stationary solution found");
    }
    if (nullity > 1) {
        throw MultiplicityError("null_space_density: steady manifold has dimension " +
                                std::to_string(nullity));
    }
    if (gap) *gap = sigma(sigma.size() - 2);
    const Vector v = svd.matrixV().col(sigma.size() - 1);
    Matrix rho = Eigen::Map<const Matrix>(v.data(), dim, dim);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    const double tr = rho.trace().real();
    if (std::abs(tr) < 1e-12) {
        throw ConvergenceError("null_space_density: traceless null vector");
    }
    return rho / tr;
}

namespace {

DensityMatrix steady_by_integration(const MasterEquation& me,
                                    const SteadyStateOptions& opts) {
    const int d = me.dim();
    const double rate = me.gamma_r > 0.0 ? me.gamma_r : 1.0;
    Matrix rho = Matrix::Identity(d, d) / static_cast<double>(d);
    auto rhs = [&](double t, const Vector& y) {
        const Eigen::Map<const Matrix> r(y.data(), d, d);
        Matrix drho = me.rhs(r, t);
        return Vector(Eigen::Map<Vector>(drho.data(), d * d));
    };
    double horizon = opts.horizon_factor / rate;
    double t = 0.0;
    Vector y = Eigen::Map<const Vector>(rho.data(), d * d);
    OdeOptions ode_opts;
    ode_opts.rtol = 1e-9;
    ode_opts.atol = 1e-12;
    while (true) {
        y = integrate_ode(rhs, y, t, horizon, ode_opts);
        t = horizon;
        const Eigen::Map<const Matrix> r(y.data(), d, d);
        const double residual = me.rhs(r, t).norm();
        if (residual <= opts.residual_tol * std::max(1.0, rate)) {
            Matrix out = r;
            out = 0.5 * (out + out.adjoint()).eval();
            return {me.space, out / out.trace().real()};
        }
        if (horizon >= opts.max_horizon_factor / rate) {
            throw ConvergenceError("steady_state: residual " + std::to_string(residual) +
                                   " after horizon " + std::to_string(horizon));
        }
        horizon *= 2.0;
    }
}

}  // namespace

DensityMatrix steady_state(const MasterEquation& me, const SteadyStateOptions& opts) {
    if (me.drive.sampled()) {
        throw std::invalid_argument("steady_state: generator must be time-independent");
    }
    const int d = me.dim();
    if (d > opts.null_space_max_dim) {
        return steady_by_integration(me, opts);
    }
    const double a = me.drive.alpha(0.0, me.gamma_r);
    Matrix h_nh = me.h_nh0;
    if (a != 0.0) {
        h_nh += -kImag * a * me.l_right.adjoint() + kImag * a * me.l_right;
    }
    const Matrix super = liouvillian_superoperator(h_nh, me.jumps);
    Matrix rho = null_space_density(super, d);
    const double rate = me.gamma_r > 0.0 ? me.gamma_r : 1.0;
    const double residual = me.rhs(rho, 0.0).norm();
    if (residual > opts.residual_tol * std::max(1.0, rate)) {
        throw ConvergenceError("steady_state: null-space residual too large: " +
                               std::to_string(residual));
    }
    return {me.space, rho};
}

void TwoLevelChain::validate() const {
    if (n_emitters < 1) throw std::invalid_argument("TwoLevelChain: N must be >= 1");
    if (gamma_r <= 0.0) throw std::invalid_argument("TwoLevelChain: gamma_r must be > 0");
}

CascadedModel cascaded_two_level(const TwoLevelChain& chain) {
    chain.validate();
    const int n = chain.n_emitters;
    if (n > 12) {
        throw SizeError("cascaded_two_level: dense representation capped at N = 12");
    }
    std::vector<HilbertSpace::Subsystem> subs;
    for (int i = 1; i <= n; ++i) {
        subs.push_back({"q" + std::to_string(i), 2});
    }
    const SpacePtr space = make_space(std::move(subs));
    const int d = space->total_dim();

    Matrix sm_local(2, 2);
    sm_local << 0.0, 1.0, 0.0, 0.0;  // sigma_- in the (G, R) basis
    std::vector<Matrix> sm(n);
    for (int i = 0; i < n; ++i) {
        sm[i] = embed_matrix(sm_local, *space, {i});
    }

    Matrix h = Matrix::Zero(d, d);
    Matrix l = Matrix::Zero(d, d);
    const double g = chain.gamma_r;
    for (int i = 0; i < n; ++i) {
        const Matrix sp = sm[i].adjoint();
        h += -chain.delta * sp * sm[i];
        h += -kImag * chain.omega_rabi * (sp - sm[i]);
        h += -0.5 * kImag * g * sp * sm[i];
        for (int m = 0; m < i; ++m) {
            h += -kImag * g * sp * sm[m];
        }
        l += sm[i];
    }
    l *= std::sqrt(g);
    return {space, Operator{space, h}, Operator{space, l}};
}

Matrix cascaded_rhs(const CascadedModel& m, const Matrix& rho,
                    const std::vector<Matrix>& extra_jumps) {
    Matrix out = -kImag * (m.h_nh.mat * rho - rho * m.h_nh.mat.adjoint());
    out += m.l_right.mat * rho * m.l_right.mat.adjoint();
    for (const Matrix& j : extra_jumps) {
        out += dissipator_apply(j, rho);
    }
    return out;
}

DensityMatrix cascaded_steady_state(const CascadedModel& m,
                                    const std::vector<Matrix>& extra_jumps,
                                    const SteadyStateOptions& opts) {
    const int d = static_cast<int>(m.h_nh.mat.rows());
    if (d <= opts.null_space_max_dim) {
        Matrix h_nh = m.h_nh.mat;
        std::vector<Matrix> jumps = {m.l_right.mat};
        for (const Matrix& j : extra_jumps) {
            jumps.push_back(j);
            h_nh -= 0.5 * kImag * j.adjoint() * j;
        }
        const Matrix super = liouvillian_superoperator(h_nh, jumps);
        return {m.space, null_space_density(super, d)};
    }
    // Long-time route through the generic machinery.
    MasterEquation me;
    me.space = m.space;
    me.h0 = 0.5 * (m.h_nh.mat + m.h_nh.mat.adjoint());  // placeholder, rebuilt below
    me.l_right = m.l_right.mat;
    me.jumps = {m.l_right.mat};
    for (const Matrix& j : extra_jumps) me.jumps.push_back(j);
    me.gamma_r = 1.0;
    me.finalize();
    // Replace the assembled h_nh0 with the exact cascaded one.
    me.h_nh0 = m.h_nh.mat;
    for (const Matrix& j : extra_jumps) {
        me.h_nh0 -= 0.5 * kImag * j.adjoint() * j;
    }
    return steady_by_integration(me, opts);
}

StateVector dimer_state(double omega_rabi, double gamma_r) {
    if (gamma_r <= 0.0) {
        throw std::invalid_argument("dimer_state: gamma_r must be > 0");
    }
    const SpacePtr space = make_space({{"q1", 2}, {"q2", 2}});
    Vector v = Vector::Zero(4);
    const double c = 2.0 * std::sqrt(2.0) * omega_rabi / gamma_r;
    // |GG> - c |S>, with |S> = (|RG> - |GR>)/sqrt(2); q1 is the slow index.
    v(0) = 1.0;
    v(2) = -c / std::sqrt(2.0);
    v(1) = c / std::sqrt(2.0);
    v.normalize();
    return {space, v};
}

}  // namespace qnet
