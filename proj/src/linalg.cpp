#include "lrdyn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lrdyn
{

double spectral_upper_bound(const SpMat& a)
{
    Eigen::VectorXd col = Eigen::VectorXd::Zero(a.cols());
    Eigen::VectorXd row = Eigen::VectorXd::Zero(a.rows());
    for (int k = 0; k < a.outerSize(); ++k)
        for (SpMat::InnerIterator it(a, k); it; ++it)
        {
            const double v = std::abs(it.value());
            col[it.col()] += v;
            row[it.row()] += v;
        }
    const double c = col.size() ? col.maxCoeff() : 0.0;
    const double r = row.size() ? row.maxCoeff() : 0.0;
    return std::sqrt(c * r);
}

double spectral_norm(const SpMat& a, Eigen::Index dense_cap)
{
    if (a.nonZeros() == 0)
        return 0.0;
    if (a.rows() <= dense_cap && a.cols() <= dense_cap)
        return spectral_norm(Mat(a));

    // power iteration on A^dagger A from a deterministic start vector
    Vec v = Vec::Ones(a.cols()).normalized();
    double lambda = 0.0;
    for (int it = 0; it < 2000; ++it)
    {
        Vec w = a.adjoint() * (a * v);
        const double nw = w.norm();
        if (nw == 0.0)
            return 0.0;
        const double next = nw;
        v = w / nw;
        if (std::abs(next - lambda) <= 1e-15 * next)
        {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return std::sqrt(lambda);
}

namespace
{
    template <typename Block>
    Block taylor_apply(const SpMat& k, double h, const Block& x)
    {
        const double knorm = spectral_upper_bound(k);
        const double total = std::abs(h) * knorm;
        const int substeps = std::max(1, static_cast<int>(std::ceil(total / 0.5)));
        const double dt = h / substeps;
        const SpMat kf = k * (-I_UNIT * dt);
        const double eps = std::numeric_limits<double>::epsilon();

        Block result = x;
        for (int s = 0; s < substeps; ++s)
        {
            const double thr = 0.25 * eps * result.norm();
            Block term = result;
            Block acc = result;
            for (int n = 1; n <= 60; ++n)
            {
                term = (kf * term) / static_cast<double>(n);
                acc += term;
                if (term.norm() <= thr)
                    break;
            }
            result = std::move(acc);
        }
        return result;
    }
} // namespace

Mat expm_minus_i_apply(const SpMat& k, double h, const Mat& x)
{
    return taylor_apply<Mat>(k, h, x);
}

Vec expm_minus_i_apply(const SpMat& k, double h, const Vec& x)
{
    return taylor_apply<Vec>(k, h, x);
}

Mat polar_unitary(const Mat& w)
{
    Eigen::JacobiSVD<Mat> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

double unitarity_defect(const Mat& w)
{
    Mat d = w.adjoint() * w - Mat::Identity(w.cols(), w.cols());
    // Frobenius bounds the spectral norm; skip the eigensolve when it is already tiny.
    const double f = d.norm();
    return f <= 1e-12 ? f : spectral_norm(d);
}

Mat expm_hermitian(const Mat& h, double t)
{
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    const Vec phases = (-I_UNIT * t * es.eigenvalues().cast<cplx>()).array().exp();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

} // namespace lrdyn
