#include "mortv/tv_reduction.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mortv/matrix_io.hpp"
#include "mortv/numerics.hpp"

namespace mortv::tv {

namespace {

std::vector<double> coarse_grid(const MovingBoundarySystem& sys, int count) {
    const double lo = sys.trajectory.min_position();
    const double hi = sys.trajectory.max_position();
    if (hi <= lo) return {lo}; // constant trajectory: single pinned node
    std::vector<double> nodes(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j)
        nodes[static_cast<std::size_t>(j)] = lo + (hi - lo) * j / (count - 1);
    return nodes;
}

Matrix weights_column(const std::vector<double>& nodes, double p) {
    Matrix w = Matrix::Zero(static_cast<Index>(nodes.size()), 1);
    if (nodes.size() == 1) {
        w(0, 0) = 1.0;
        return w;
    }
    const InterpolationWeights iw = interpolation_weights(nodes, p);
    w(iw.interval, 0) = iw.w_lo;
    w(iw.interval + 1, 0) = iw.w_hi;
    return w;
}

} // namespace

InterpolationWeights interpolation_weights(const std::vector<double>& samples, double p) {
    if (samples.size() < 2) throw ConfigError("interpolation_weights: need at least 2 samples");
    const double span = samples.back() - samples.front();
    const double tol = 1e-9 * std::max(1.0, std::abs(span));
    if (p < samples.front() - tol || p > samples.back() + tol)
        throw PositionOutOfRangeError("interpolation_weights: p outside sampled range");
    p = std::clamp(p, samples.front(), samples.back());

    auto it = std::upper_bound(samples.begin(), samples.end(), p);
    Index i = static_cast<Index>(std::distance(samples.begin(), it)) - 1;
    i = std::clamp<Index>(i, 0, static_cast<Index>(samples.size()) - 2);

    InterpolationWeights out;
    out.interval = i;
    out.w_hi = (p - samples[static_cast<std::size_t>(i)]) /
               (samples[static_cast<std::size_t>(i + 1)] - samples[static_cast<std::size_t>(i)]);
    out.w_lo = 1.0 - out.w_hi;
    return out;
}

// ---------------------------------------------------------------------------
// Low-rank input/output approximation on a coarse grid

Matrix LowRankInputApprox::Btilde_at(double p) const { return weights_column(node_positions, p); }

Matrix LowRankOutputApprox::Ctilde_at(double p) const {
    return weights_column(node_positions, p).transpose();
}

LowRankInputApprox lowrank_input(const MovingBoundarySystem& sys, int m_tilde) {
    if (m_tilde < 2) throw ConfigError("lowrank_input: m_tilde must be >= 2");
    if (sys.m() != 1) throw ConfigError("lowrank_input: single-input systems only");
    LowRankInputApprox out;
    out.node_positions = coarse_grid(sys, m_tilde);
    out.Bconst = Matrix(sys.n(), static_cast<Index>(out.node_positions.size()));
    for (std::size_t j = 0; j < out.node_positions.size(); ++j)
        out.Bconst.col(static_cast<Index>(j)) = sys.b(out.node_positions[j]);
    return out;
}

LowRankOutputApprox lowrank_output(const MovingBoundarySystem& sys, int q_tilde) {
    if (q_tilde < 2) throw ConfigError("lowrank_output: q_tilde must be >= 2");
    if (sys.q() != 1) throw ConfigError("lowrank_output: single-output systems only");
    LowRankOutputApprox out;
    out.node_positions = coarse_grid(sys, q_tilde);
    out.Cconst = Matrix(static_cast<Index>(out.node_positions.size()), sys.n());
    for (std::size_t j = 0; j < out.node_positions.size(); ++j)
        out.Cconst.row(static_cast<Index>(j)) = sys.c(out.node_positions[j]);
    return out;
}

// ---------------------------------------------------------------------------
// Two-step method

ReducedModel two_step_reduce(const MovingBoundarySystem& sys, int m_tilde, int q_tilde,
                             TwoStepEngine engine, int r, const TwoStepOptions& opts) {
    const double p0 = sys.trajectory.position(0.0);
    const bool lift_input = sys.coupling != Coupling::SensorOnly;
    const bool lift_output = sys.coupling != Coupling::LoadOnly;

    LowRankInputApprox bl;
    LowRankOutputApprox cl;
    Matrix b_lift = lift_input ? (bl = lowrank_input(sys, m_tilde)).Bconst : sys.b(p0);
    Matrix c_lift = lift_output ? (cl = lowrank_output(sys, q_tilde)).Cconst : sys.c(p0);
    StateSpaceSystem lifted(sys.E, sys.A, std::move(b_lift), std::move(c_lift));

    ReducedModel rom;
    switch (engine) {
    case TwoStepEngine::Irka:
        rom = lti::irka(lifted, r, opts.irka);
        break;
    case TwoStepEngine::TwoSidedKrylov:
        rom = lti::two_sided_krylov(lifted, KrylovConfig{opts.s0, r, lti::KrylovSide::TwoSided});
        break;
    case TwoStepEngine::BalancedTruncation:
        rom = lti::balanced_truncation(lifted, r, opts.bt_dense_limit).rom;
        break;
    }

    if (lift_input) {
        const Matrix br_lift = rom.Br; // r x m_tilde
        rom.Br_of = [br_lift, bl](double p) { return Matrix(br_lift * bl.Btilde_at(p)); };
        rom.Br = rom.Br_of(p0);
    }
    if (lift_output) {
        const Matrix cr_lift = rom.Cr; // q_tilde x r
        rom.Cr_of = [cr_lift, cl](double p) { return Matrix(cl.Ctilde_at(p) * cr_lift); };
        rom.Cr = rom.Cr_of(p0);
    }
    return rom;
}

// ---------------------------------------------------------------------------
// One-sided fixed-basis strategies

ReducedModel one_sided_fixed_basis_reduce(const MovingBoundarySystem& sys,
                                          const KrylovConfig& cfg) {
    const double p0 = sys.trajectory.position(0.0);
    if (sys.coupling == Coupling::LoadOnly) {
        // output Krylov from the constant C; B(t) stays a map
        StateSpaceSystem frozen = sys.frozen(p0);
        Matrix w = lti::output_krylov_basis(frozen, cfg);
        ReducedModel rom = lti::project(frozen, w, w);
        auto b_map = sys.b;
        rom.Br_of = [w, b_map](double p) { return Matrix(w.transpose() * b_map(p)); };
        rom.Br = rom.Br_of(p0);
        return rom;
    }
    if (sys.coupling == Coupling::SensorOnly) {
        StateSpaceSystem frozen = sys.frozen(p0);
        Matrix v = lti::input_krylov_basis(frozen, cfg);
        ReducedModel rom = lti::project(frozen, v, v);
        auto c_map = sys.c;
        rom.Cr_of = [v, c_map](double p) { return Matrix(c_map(p) * v); };
        rom.Cr = rom.Cr_of(p0);
        return rom;
    }
    throw WrongCouplingError(
        "one_sided_fixed_basis_reduce: combined coupling has both matrices varying; "
        "use modal truncation or the two-step method");
}

ReducedModel modal_reduce_combined(const MovingBoundarySystem& sys, int r, EigCriterion criterion,
                                   ModalSide side) {
    const double p0 = sys.trajectory.position(0.0);
    ReducedModel rom = lti::modal_truncation(sys.frozen(p0), r, criterion, side);
    const Matrix v = rom.V, w = rom.W;
    auto b_map = sys.b;
    auto c_map = sys.c;
    rom.Br_of = [w, b_map](double p) { return Matrix(w.transpose() * b_map(p)); };
    rom.Cr_of = [v, c_map](double p) { return Matrix(c_map(p) * v); };
    rom.Br = rom.Br_of(p0);
    rom.Cr = rom.Cr_of(p0);
    return rom;
}

// ---------------------------------------------------------------------------
// Matrix interpolation: offline phase

namespace {

// rational Krylov against a shared factorization, orthonormalizing each new
// direction before the next solve. On strongly diffusive spectra the raw
// sequence saturates numerically; the orthogonalized residual is then tiny
// but still a valid new direction, so the recurrence continues with it
// instead of aborting (the transformation algebra needs all r columns).
// resolved_depth reports how many leading columns carried residuals above
// the 1e-10 deflation tolerance; later columns are orthonormal noise whose
// dependence on the sample position is meaningless, so the slope
// computation ignores them. Plain deterministic MGS keeps neighboring
// local bases sign-continuous in the sampled parameter.
Matrix local_input_krylov(const numerics::ShiftedSolver& solver, const SystemMatrix& e,
                          const Matrix& b, int r, int* resolved_depth = nullptr) {
    Matrix q(b.rows(), r);
    Matrix x = solver.solve(b);
    int resolved = r;
    for (int j = 0; j < r; ++j) {
        Vector v = x.col(0);
        const double ref = v.norm();
        const int passes = 3; // tiny residuals need the extra sweep
        for (int pass = 0; pass < passes; ++pass)
            for (int i = 0; i < j; ++i) v.noalias() -= q.col(i).dot(v) * q.col(i);
        const double nv = v.norm();
        if (!(nv > 0.0) || !v.allFinite())
            throw BasisDegenerateError("matrint_offline: local Krylov basis rank-deficient");
        if (j < resolved && nv <= 1e-10 * ref) resolved = j;
        q.col(j) = v / nv;
        if (j + 1 < r) x = solver.solve(e.apply(Matrix(q.col(j))));
    }
    if (resolved_depth) *resolved_depth = resolved;
    return q;
}

Matrix inverse_checked(const Matrix& k, const char* what) {
    Eigen::JacobiSVD<Matrix> svd(k);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) < 1e-12 * sv(0))
        throw SingularTransformationError(std::string(what) +
                                          " singular to 1e-12: inconsistent local bases, "
                                          "resample or re-orient");
    return k.inverse();
}

} // namespace

int MatrIntOffline::at(int i) const {
    if (i < 0 || i >= sample_count())
        throw ConfigError("MatrIntOffline: sample index out of range");
    return i;
}

Matrix MatrIntOffline::slope(int interval) const {
    if (interval < 0 || interval + 1 >= sample_count())
        throw ConfigError("MatrIntOffline: interval out of range");
    if (dv_.empty()) return Matrix::Zero(n_, r_);
    return dv_[static_cast<std::size_t>(interval)];
}

Matrix MatrIntOffline::compute_Vdot(double p, double pdot) const {
    const InterpolationWeights iw = interpolation_weights(samples_, p);
    return slope(static_cast<int>(iw.interval)) * pdot;
}

Matrix MatrIntOffline::compute_Tdot(int i, const Matrix& vdot) const {
    const Matrix& ti = t_[static_cast<std::size_t>(at(i))];
    return -ti * (ref_.transpose() * vdot) * ti;
}

void MatrIntOffline::derive() {
    const std::size_t k = samples_.size();
    t_.resize(k);
    m_.resize(k);
    ehat_.resize(k);
    ahat_.resize(k);
    bhat_.resize(k);
    chat_.resize(k);
    me_.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const Matrix& vi = local_basis(static_cast<int>(i));
        const Matrix& wi = left_basis(static_cast<int>(i));
        t_[i] = inverse_checked(ref_.transpose() * vi, "R'V_i");
        m_[i] = inverse_checked(ref_.transpose() * wi, "R'W_i");
        ehat_[i] = m_[i].transpose() * er_raw_[i] * t_[i];
        ahat_[i] = m_[i].transpose() * ar_raw_[i] * t_[i];
        bhat_[i] = m_[i].transpose() * br_raw_[i];
        chat_[i] = cr_raw_[i] * t_[i];
        me_[i] = m_[i].transpose() * er_raw_[i];
    }
}

MatrIntOffline matrint_offline(const MovingBoundarySystem& sys, std::vector<double> samples,
                               int r, MatrintMode mode, const MatrintOptions& opts) {
    if (samples.size() < 2) throw ConfigError("matrint_offline: need k >= 2 samples");
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (!(samples[i] > samples[i - 1]))
            throw ConfigError("matrint_offline: samples must be strictly increasing");
    const double span_tol = 1e-9 * std::max(1.0, samples.back() - samples.front());
    if (samples.front() > sys.trajectory.min_position() + span_tol ||
        samples.back() < sys.trajectory.max_position() - span_tol)
        throw ConfigError("matrint_offline: samples must cover the trajectory range");
    if (r < 1 || r > sys.n()) throw ConfigError("matrint_offline: r out of range");

    MatrIntOffline off;
    off.mode_ = mode;
    off.r_ = r;
    off.n_ = sys.n();
    off.samples_ = std::move(samples);
    const std::size_t k = off.samples_.size();

    switch (mode) {
    case MatrintMode::Standard:
    case MatrintMode::Extended: {
        numerics::ShiftedSolver solver(sys.A, sys.E, opts.s0);
        std::vector<Matrix> inputs(k);
        double bmax = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            inputs[i] = sys.b(off.samples_[i]);
            bmax = std::max(bmax, inputs[i].norm());
        }
        if (!(bmax > 0.0))
            throw BasisDegenerateError("matrint_offline: input map vanishes at every sample");
        // a sample whose input column vanishes (e.g. the load crossing a
        // support) has no Krylov space of its own; it borrows the nearest
        // live sample's basis, which also zeroes the slope on that side
        std::vector<Matrix> bases(k);
        std::vector<int> depths(k, 0);
        std::vector<bool> live(k, false);
        for (std::size_t i = 0; i < k; ++i) {
            if (inputs[i].norm() > 1e-14 * bmax) {
                bases[i] = local_input_krylov(solver, sys.E, inputs[i], r, &depths[i]);
                live[i] = true;
            }
        }
        for (std::size_t i = 0; i < k; ++i) {
            if (live[i]) continue;
            std::size_t best = k;
            for (std::size_t j = 0; j < k; ++j)
                if (live[j] && (best == k || std::llabs(static_cast<long long>(j) -
                                                        static_cast<long long>(i)) <
                                    std::llabs(static_cast<long long>(best) -
                                               static_cast<long long>(i))))
                    best = j;
            bases[i] = bases[best];
            depths[i] = depths[best];
        }
        // a single-shift Krylov chain saturates once its residual falls
        // under the deflation tolerance; columns past that depth would be
        // dropped by the deflation rule, so the shared local order is capped
        // at the depth every sample actually resolved
        int depth = r;
        for (std::size_t i = 0; i < k; ++i) depth = std::min(depth, depths[i]);
        if (depth < 1)
            throw BasisDegenerateError("matrint_offline: local Krylov bases have no resolved columns");
        if (depth < r) {
            off.r_ = depth;
            for (std::size_t i = 0; i < k; ++i)
                bases[i] = Matrix(bases[i].leftCols(depth));
            for (std::size_t i = 0; i < k; ++i) depths[i] = std::min(depths[i], depth);
        }
        off.bases_v_ = std::move(bases);
        off.bases_w_ = off.bases_v_; // one-sided local reductions
        off.resolved_ = std::move(depths);
        break;
    }
    case MatrintMode::FixedOutputBasis: {
        if (sys.coupling != Coupling::LoadOnly)
            throw WrongCouplingError("matrint_offline: fixed output basis needs a constant C");
        off.single_basis_ = true;
        Matrix w = lti::output_krylov_basis(sys.frozen(off.samples_.front()),
                                            KrylovConfig{opts.s0, r, lti::KrylovSide::Output});
        if (w.cols() < r)
            throw BasisDegenerateError("matrint_offline: output Krylov basis rank-deficient");
        off.bases_v_ = {w};
        off.bases_w_ = {w};
        break;
    }
    case MatrintMode::FixedInputBasis: {
        if (sys.coupling != Coupling::SensorOnly)
            throw WrongCouplingError("matrint_offline: fixed input basis needs a constant B");
        off.single_basis_ = true;
        Matrix v = lti::input_krylov_basis(sys.frozen(off.samples_.front()),
                                           KrylovConfig{opts.s0, r, lti::KrylovSide::Input});
        if (v.cols() < r)
            throw BasisDegenerateError("matrint_offline: input Krylov basis rank-deficient");
        off.bases_v_ = {v};
        off.bases_w_ = {v};
        break;
    }
    case MatrintMode::Modal: {
        off.single_basis_ = true;
        ReducedModel rom = lti::modal_truncation(sys.frozen(off.samples_.front()),
                                                 r, opts.criterion, opts.modal_side);
        off.bases_v_ = {rom.V};
        off.bases_w_ = {rom.W};
        off.r_ = static_cast<int>(rom.V.cols()); // pair extension may bump the order
        break;
    }
    }
    r = off.r_;

    // reference subspace: r dominant directions of [V_1 ... V_k]
    if (off.single_basis_) {
        off.ref_ = numerics::principal_directions(off.bases_v_[0], r);
    } else {
        Matrix all(off.n_, static_cast<Index>(k) * r);
        for (std::size_t i = 0; i < k; ++i)
            all.middleCols(static_cast<Index>(i) * r, r) = off.bases_v_[i];
        off.ref_ = numerics::principal_directions(all, r);
    }

    // untransformed local reduced matrices
    off.er_raw_.resize(k);
    off.ar_raw_.resize(k);
    off.br_raw_.resize(k);
    off.cr_raw_.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const Matrix& vi = off.local_basis(static_cast<int>(i));
        const Matrix& wi = off.left_basis(static_cast<int>(i));
        off.er_raw_[i] = wi.transpose() * sys.E.apply(vi);
        off.ar_raw_[i] = wi.transpose() * sys.A.apply(vi);
        off.br_raw_[i] = wi.transpose() * sys.b(off.samples_[i]);
        off.cr_raw_[i] = sys.c(off.samples_[i]) * vi;
    }
    off.derive();

    // per-interval slopes and the reduced products the online phase needs
    if (!off.single_basis_) {
        off.dv_.resize(k - 1);
        off.p1_lo_.resize(k - 1);
        off.p1_hi_.resize(k - 1);
        off.p2_.resize(k - 1);
        for (std::size_t t = 0; t + 1 < k; ++t) {
            off.dv_[t] = (off.bases_v_[t + 1] - off.bases_v_[t]) /
                         (off.samples_[t + 1] - off.samples_[t]);
            // the slope of a column only means something where both local
            // recurrences actually resolved that direction
            const int ok = std::min(off.resolved_[t], off.resolved_[t + 1]);
            if (ok < off.r_) off.dv_[t].rightCols(off.r_ - ok).setZero();
            const Matrix e_dv = sys.E.apply(off.dv_[t]);
            off.p1_lo_[t] = off.m_[t].transpose() * (off.bases_w_[t].transpose() * e_dv);
            off.p1_hi_[t] = off.m_[t + 1].transpose() * (off.bases_w_[t + 1].transpose() * e_dv);
            off.p2_[t] = off.ref_.transpose() * off.dv_[t];
        }
    }
    return off;
}

// ---------------------------------------------------------------------------
// Matrix interpolation: online phase

ReducedModel MatrIntOffline::online(double p, double pdot) const {
    const InterpolationWeights iw = interpolation_weights(samples_, p);
    const std::size_t t = static_cast<std::size_t>(iw.interval);
    const bool extended = mode_ == MatrintMode::Extended;

    // new system matrix of an active sample, with the derivative terms in
    // extended mode: Â_i - M'W'E V̇ T_i - M'E_r Ṫ_i
    auto a_new = [&](std::size_t i, const Matrix& p1) {
        Matrix a = ahat_[i];
        if (extended && pdot != 0.0 && !dv_.empty()) {
            const Matrix tdot = -pdot * (t_[i] * p2_[t] * t_[i]);
            a -= pdot * (p1 * t_[i]);
            a -= me_[i] * tdot;
        }
        return a;
    };

    ReducedModel rom;
    const bool at_lo = iw.w_hi == 0.0;
    const bool at_hi = iw.w_lo == 0.0;
    if (single_basis_) {
        // one projection pair: E, A (and the map on the constant side) do not
        // vary, only the sampled input/output matrices are interpolated
        rom.Er = ehat_[0];
        rom.Ar = ahat_[0];
        const std::size_t hit = at_lo ? t : t + 1;
        rom.Br = mode_ == MatrintMode::FixedInputBasis
                     ? bhat_[0]
                     : (at_lo || at_hi ? bhat_[hit]
                                       : Matrix(iw.w_lo * bhat_[t] + iw.w_hi * bhat_[t + 1]));
        rom.Cr = mode_ == MatrintMode::FixedOutputBasis
                     ? chat_[0]
                     : (at_lo || at_hi ? chat_[hit]
                                       : Matrix(iw.w_lo * chat_[t] + iw.w_hi * chat_[t + 1]));
    } else if (at_lo || at_hi) {
        // exact sample hit: return the stored local matrices bit-for-bit
        const std::size_t i = at_lo ? t : t + 1;
        rom.Er = ehat_[i];
        rom.Ar = extended ? a_new(i, at_lo ? p1_lo_[t] : p1_hi_[t]) : ahat_[i];
        rom.Br = bhat_[i];
        rom.Cr = chat_[i];
    } else {
        rom.Er = iw.w_lo * ehat_[t] + iw.w_hi * ehat_[t + 1];
        rom.Br = iw.w_lo * bhat_[t] + iw.w_hi * bhat_[t + 1];
        rom.Cr = iw.w_lo * chat_[t] + iw.w_hi * chat_[t + 1];
        if (extended) {
            rom.Ar = iw.w_lo * a_new(t, p1_lo_[t]) + iw.w_hi * a_new(t + 1, p1_hi_[t]);
        } else {
            rom.Ar = iw.w_lo * ahat_[t] + iw.w_hi * ahat_[t + 1];
        }
    }

    Eigen::FullPivLU<Matrix> lu(rom.Er);
    if (!lu.isInvertible())
        throw SingularReducedEError("matrint_online: interpolated E_r singular in interval " +
                                    std::to_string(iw.interval));
    return rom;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

const char* mode_name(MatrintMode m) {
    switch (m) {
    case MatrintMode::Standard: return "standard";
    case MatrintMode::Extended: return "extended";
    case MatrintMode::FixedOutputBasis: return "fixed-output-basis";
    case MatrintMode::FixedInputBasis: return "fixed-input-basis";
    case MatrintMode::Modal: return "modal";
    }
    return "standard";
}

MatrintMode mode_from_name(const std::string& s) {
    if (s == "standard") return MatrintMode::Standard;
    if (s == "extended") return MatrintMode::Extended;
    if (s == "fixed-output-basis") return MatrintMode::FixedOutputBasis;
    if (s == "fixed-input-basis") return MatrintMode::FixedInputBasis;
    if (s == "modal") return MatrintMode::Modal;
    throw IoError("unknown matrint mode: " + s);
}

} // namespace

void MatrIntOffline::save(const std::filesystem::path& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ofstream manifest(dir / "manifest.txt");
    if (!manifest) throw IoError("cannot write manifest in " + dir.string());
    manifest << "mortv-matrint v1\n";
    manifest << "mode " << mode_name(mode_) << "\n";
    manifest << "r " << r_ << "\n";
    manifest << "k " << sample_count() << "\n";
    manifest << "n " << n_ << "\n";
    manifest << "single_basis " << (single_basis_ ? 1 : 0) << "\n";
    manifest << "samples";
    char buf[40];
    for (double s : samples_) {
        std::snprintf(buf, sizeof(buf), "%.17g", s);
        manifest << " " << buf;
    }
    manifest << "\n";
    if (!resolved_.empty()) {
        manifest << "resolved";
        for (int d : resolved_) manifest << " " << d;
        manifest << "\n";
    }

    io::write_dense(dir / "R.txt", ref_);
    auto tag = [](const char* base, std::size_t i) {
        std::ostringstream os;
        os << base << "_" << i << ".txt";
        return os.str();
    };
    for (std::size_t i = 0; i < bases_v_.size(); ++i) {
        io::write_dense(dir / tag("V", i), bases_v_[i]);
        io::write_dense(dir / tag("W", i), bases_w_[i]);
    }
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        io::write_dense(dir / tag("Er_raw", i), er_raw_[i]);
        io::write_dense(dir / tag("Ar_raw", i), ar_raw_[i]);
        io::write_dense(dir / tag("Br_raw", i), br_raw_[i]);
        io::write_dense(dir / tag("Cr_raw", i), cr_raw_[i]);
    }
    for (std::size_t t = 0; t < p1_lo_.size(); ++t) {
        io::write_dense(dir / tag("P1lo", t), p1_lo_[t]);
        io::write_dense(dir / tag("P1hi", t), p1_hi_[t]);
    }
}

MatrIntOffline MatrIntOffline::load(const std::filesystem::path& dir) {
    std::ifstream manifest(dir / "manifest.txt");
    if (!manifest) throw IoError("cannot read manifest in " + dir.string());
    std::string line;
    if (!std::getline(manifest, line) || line != "mortv-matrint v1")
        throw IoError("unrecognized manifest in " + dir.string());

    MatrIntOffline off;
    int k = 0, single = 0;
    std::string key;
    while (manifest >> key) {
        if (key == "mode") {
            std::string val;
            manifest >> val;
            off.mode_ = mode_from_name(val);
        } else if (key == "r") {
            manifest >> off.r_;
        } else if (key == "k") {
            manifest >> k;
        } else if (key == "n") {
            manifest >> off.n_;
        } else if (key == "single_basis") {
            manifest >> single;
        } else if (key == "samples") {
            off.samples_.resize(static_cast<std::size_t>(k));
            for (auto& s : off.samples_) manifest >> s;
        } else if (key == "resolved") {
            off.resolved_.resize(static_cast<std::size_t>(k));
            for (auto& d : off.resolved_) manifest >> d;
        } else {
            throw IoError("unknown manifest key: " + key);
        }
    }
    off.single_basis_ = single != 0;

    auto tag = [](const char* base, std::size_t i) {
        std::ostringstream os;
        os << base << "_" << i << ".txt";
        return os.str();
    };
    off.ref_ = io::read_dense(dir / "R.txt");
    const std::size_t nb = off.single_basis_ ? 1 : static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < nb; ++i) {
        off.bases_v_.push_back(io::read_dense(dir / tag("V", i)));
        off.bases_w_.push_back(io::read_dense(dir / tag("W", i)));
    }
    for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
        off.er_raw_.push_back(io::read_dense(dir / tag("Er_raw", i)));
        off.ar_raw_.push_back(io::read_dense(dir / tag("Ar_raw", i)));
        off.br_raw_.push_back(io::read_dense(dir / tag("Br_raw", i)));
        off.cr_raw_.push_back(io::read_dense(dir / tag("Cr_raw", i)));
    }
    off.derive();
    if (!off.single_basis_) {
        const std::size_t ni = static_cast<std::size_t>(k) - 1;
        off.dv_.resize(ni);
        off.p1_lo_.resize(ni);
        off.p1_hi_.resize(ni);
        off.p2_.resize(ni);
        for (std::size_t t = 0; t < ni; ++t) {
            off.dv_[t] = (off.bases_v_[t + 1] - off.bases_v_[t]) /
                         (off.samples_[t + 1] - off.samples_[t]);
            if (!off.resolved_.empty()) {
                const int ok = std::min(off.resolved_[t], off.resolved_[t + 1]);
                if (ok < off.r_) off.dv_[t].rightCols(off.r_ - ok).setZero();
            }
            off.p1_lo_[t] = io::read_dense(dir / tag("P1lo", t));
            off.p1_hi_[t] = io::read_dense(dir / tag("P1hi", t));
            off.p2_[t] = off.ref_.transpose() * off.dv_[t];
        }
    }
    return off;
}

} // namespace mortv::tv
