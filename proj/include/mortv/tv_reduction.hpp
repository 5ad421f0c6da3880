#pragma once

#include <filesystem>
#include <vector>

#include "mortv/lti_reduction.hpp"
#include "mortv/systems.hpp"

namespace mortv::tv {

using lti::EigCriterion;
using lti::KrylovConfig;
using lti::ModalSide;
using lti::ReducedModel;

/// Low-rank input approximation B(p) ~ Bconst * Btilde(p): Bconst holds the
/// input columns at the coarse grid nodes, Btilde(p) the piecewise-linear
/// interpolation weights (at most two nonzero, summing to one).
struct LowRankInputApprox {
    Matrix Bconst; // n x m_tilde
    std::vector<double> node_positions;
    Matrix Btilde_at(double p) const; // m_tilde x 1
};

/// Dual low-rank output approximation C(p) ~ Ctilde(p) * Cconst.
struct LowRankOutputApprox {
    Matrix Cconst; // q_tilde x n
    std::vector<double> node_positions;
    Matrix Ctilde_at(double p) const; // 1 x q_tilde
};

LowRankInputApprox lowrank_input(const MovingBoundarySystem& sys, int m_tilde);
LowRankOutputApprox lowrank_output(const MovingBoundarySystem& sys, int q_tilde);

enum class TwoStepEngine { Irka, TwoSidedKrylov, BalancedTruncation };

struct TwoStepOptions {
    double s0 = 0.0;
    lti::IrkaOptions irka{};
    Index bt_dense_limit = 2000;
};

/// Two-step method: lift the time variability into constant low-rank input
/// and/or output factors (per coupling), reduce the lifted MIMO LTI system
/// with the chosen engine, and carry the interpolation factors as
/// position-dependent reduced maps.
ReducedModel two_step_reduce(const MovingBoundarySystem& sys, int m_tilde, int q_tilde,
                             TwoStepEngine engine, int r, const TwoStepOptions& opts = {});

/// One-sided reduction with the time-independent Krylov side: output
/// Krylov for moving loads, input Krylov for moving sensors. Combined
/// coupling is rejected (both matrices vary).
ReducedModel one_sided_fixed_basis_reduce(const MovingBoundarySystem& sys,
                                          const KrylovConfig& cfg);

/// Modal truncation of the constant pencil; both reduced input and output
/// stay position-dependent maps.
ReducedModel modal_reduce_combined(const MovingBoundarySystem& sys, int r,
                                   EigCriterion criterion,
                                   ModalSide side = ModalSide::OneSided);

// ---------------------------------------------------------------------------
// p(t)MOR by matrix interpolation

enum class MatrintMode { Standard, Extended, FixedOutputBasis, FixedInputBasis, Modal };

struct InterpolationWeights {
    Index interval = 0; // active interval [p_i, p_i+1]
    double w_lo = 1.0;  // weight of sample i; w_lo + w_hi = 1 exactly
    double w_hi = 0.0;
};

InterpolationWeights interpolation_weights(const std::vector<double>& samples, double p);

struct MatrintOptions {
    double s0 = 0.0;
    EigCriterion criterion = EigCriterion::SmallestMagnitude; // Modal mode
    ModalSide modal_side = ModalSide::OneSided;
};

/// Offline data of the matrix interpolation method: local bases, reference
/// subspace R, transformations T_i = (R'V_i)^{-1}, M_i = (R'W_i)^{-1},
/// transformed reduced matrices and the per-interval basis slopes used for
/// the finite-difference derivative of V.
class MatrIntOffline {
public:
    MatrintMode mode() const { return mode_; }
    int order() const { return r_; }
    int sample_count() const { return static_cast<int>(samples_.size()); }
    Index full_order() const { return n_; }
    bool single_basis() const { return single_basis_; }
    const std::vector<double>& samples() const { return samples_; }

    const Matrix& reference_subspace() const { return ref_; }
    const Matrix& local_basis(int i) const { return single_basis_ ? bases_v_[0] : bases_v_[at(i)]; }
    const Matrix& left_basis(int i) const { return single_basis_ ? bases_w_[0] : bases_w_[at(i)]; }
    const Matrix& transformation(int i) const { return t_[at(i)]; }
    const Matrix& left_transformation(int i) const { return m_[at(i)]; }
    const Matrix& Ehat(int i) const { return ehat_[at(i)]; }
    const Matrix& Ahat(int i) const { return ahat_[at(i)]; }
    const Matrix& Bhat(int i) const { return bhat_[at(i)]; }
    const Matrix& Chat(int i) const { return chat_[at(i)]; }
    /// (V_{t+1} - V_t) / (p_{t+1} - p_t); zero in single-basis modes.
    Matrix slope(int interval) const;

    /// V̇ at (p, pdot): interval slope times pdot, piecewise constant in p.
    Matrix compute_Vdot(double p, double pdot) const;
    /// Ṫ_i = -T_i R' V̇ T_i (derivative of the matrix inverse).
    Matrix compute_Tdot(int i, const Matrix& vdot) const;

    /// Interpolated reduced model at (p, pdot). Standard interpolation for
    /// all modes; Extended additionally assembles the -M'W'E V̇ T and
    /// -M'E_r Ṫ corrections for the two active samples.
    ReducedModel online(double p, double pdot) const;

    void save(const std::filesystem::path& dir) const;
    static MatrIntOffline load(const std::filesystem::path& dir);

private:
    friend MatrIntOffline matrint_offline(const MovingBoundarySystem&, std::vector<double>, int,
                                          MatrintMode, const MatrintOptions&);
    int at(int i) const;
    void derive(); // transformations, transformed matrices, slope products

    MatrintMode mode_ = MatrintMode::Standard;
    int r_ = 0;
    Index n_ = 0;
    bool single_basis_ = false;
    std::vector<double> samples_;
    std::vector<Matrix> bases_v_, bases_w_; // single entry in single-basis modes
    std::vector<int> resolved_; // per sample: leading columns the Krylov recurrence resolved
    Matrix ref_;
    std::vector<Matrix> er_raw_, ar_raw_, br_raw_, cr_raw_; // untransformed locals
    std::vector<Matrix> t_, m_;
    std::vector<Matrix> ehat_, ahat_, bhat_, chat_;
    std::vector<Matrix> me_;       // M_i' E_r,i (for the Ṫ correction term)
    std::vector<Matrix> dv_;       // per-interval slopes, empty in single-basis modes
    std::vector<Matrix> p1_lo_, p1_hi_; // M_i'W_i'E dV_t for i = t, t+1
    std::vector<Matrix> p2_;            // R' dV_t
};

MatrIntOffline matrint_offline(const MovingBoundarySystem& sys, std::vector<double> samples,
                               int r, MatrintMode mode, const MatrintOptions& opts = {});

inline ReducedModel matrint_online(const MatrIntOffline& off, double p, double pdot) {
    return off.online(p, pdot);
}

} // namespace mortv::tv
