#pragma once

// Small numerical toolbox shared by all modules: Eigen aliases, operator
// norms, the action of exp(-i h K) by Taylor series, and polar
// re-unitarization.

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace lrdyn
{
    using cplx = std::complex<double>;
    using Mat = Eigen::MatrixXcd;
    using Vec = Eigen::VectorXcd;
    using SpMat = Eigen::SparseMatrix<cplx>;
    using Triplet = Eigen::Triplet<cplx>;

    inline constexpr cplx I_UNIT{0.0, 1.0};

    /// Thrown when a requested object would exceed the configured mode caps.
    class ResourceLimit : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Thrown on geometric misuse: supports leaving a box, bad shifts, ...
    class GeometryError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// spectral norm of a dense matrix.
    template <typename Derived>
    double spectral_norm(const Eigen::MatrixBase<Derived>& a)
    {
        if (a.size() == 0)
            return 0.0;
        Mat m = a;
        Mat g = m.adjoint() * m;
        Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
        return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    }

    /// || A - A^dagger || (spectral).
    template <typename Derived>
    double hermiticity_defect(const Eigen::MatrixBase<Derived>& a)
    {
        return spectral_norm(a - a.adjoint());
    }

    /// Spectral norm of a sparse matrix. Exact (dense eigen-solve of A^dagger A)
    /// up to dense_cap rows, power iteration beyond.
    double spectral_norm(const SpMat& a, Eigen::Index dense_cap = 1024);

    /// Upper bound for the spectral norm of a sparse matrix, sqrt(||A||_1 ||A||_inf).
    double spectral_upper_bound(const SpMat& a);

    /// Computes exp(-i h K) X for a sparse K (assumed Hermitian up to the
    /// complex coefficients the caller put in) by a Taylor series. The series
    /// is substepped so that |h| * ||K|| <= 0.5 on each substep; terms are
    /// added until they drop below machine precision relative to the result.
    Mat expm_minus_i_apply(const SpMat& k, double h, const Mat& x);
    Vec expm_minus_i_apply(const SpMat& k, double h, const Vec& x);

    /// Closest unitary to w (polar factor U V^dagger from the SVD).
    Mat polar_unitary(const Mat& w);

    /// || W^dagger W - 1 || (spectral). Below 1e-12 the Frobenius norm, an
    /// upper bound, is returned instead.
    double unitarity_defect(const Mat& w);

    /// Dense Hermitian matrix exponential exp(-i t H) by eigendecomposition.
    Mat expm_hermitian(const Mat& h, double t);

} // namespace lrdyn
