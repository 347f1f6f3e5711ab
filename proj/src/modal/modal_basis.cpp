#include "modalsim/modal/modal_basis.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "modalsim/error.hpp"
#include "modalsim/simd/kernels.hpp"

namespace modalsim::modal {

namespace {

void fix_column_signs(Eigen::MatrixXd& phi) {
    for (Eigen::Index j = 0; j < phi.cols(); ++j) {
        Eigen::Index idx = 0;
        phi.col(j).cwiseAbs().maxCoeff(&idx);
        if (phi(idx, j) < 0)
            phi.col(j) = -phi.col(j);
    }
}

void mass_normalize(Eigen::MatrixXd& phi, const Eigen::VectorXd& mass) {
    for (Eigen::Index j = 0; j < phi.cols(); ++j) {
        const double norm2 = phi.col(j).dot(mass.cwiseProduct(phi.col(j)));
        phi.col(j) /= std::sqrt(norm2);
    }
}

// spectral_scale must estimate the full operator's largest eigenvalue, not
// just the retained band; a truncated basis can hold only rigid modes.
int clamp_small_eigenvalues(Eigen::VectorXd& lambda, double spectral_scale) {
    if (lambda.size() == 0)
        return 0;
    const double lmax =
        std::max({lambda.cwiseAbs().maxCoeff(), spectral_scale, 1e-300});
    int clamped = 0;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda[i] < -1e-9 * lmax)
            throw NumericalError("eigensolver produced negative eigenvalue " +
                                 std::to_string(lambda[i]));
        if (lambda[i] < 1e-9 * lmax && lambda[i] != 0.0) {
            lambda[i] = 0.0;
            ++clamped;
        }
    }
    return clamped;
}

// Cheap upper-order estimate of lambda_max from the pencil diagonal.
double spectral_scale_estimate(const fem::SystemMatrices& sys) {
    double scale = 0.0;
    for (Eigen::Index i = 0; i < sys.stiffness.rows(); ++i)
        scale = std::max(scale, std::abs(sys.stiffness.coeff(i, i)) / sys.mass[i]);
    return scale;
}

ModalBasis dense_solve(const fem::SystemMatrices& sys, int r) {
    const Eigen::Index n = sys.stiffness.rows();
    const Eigen::VectorXd dinv_sqrt = sys.mass.cwiseSqrt().cwiseInverse();

    Eigen::MatrixXd a = Eigen::MatrixXd(sys.stiffness);
    a = dinv_sqrt.asDiagonal() * a * dinv_sqrt.asDiagonal();
    a = ((a + a.transpose()) * 0.5).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success)
        throw NumericalError("dense eigensolver failed to converge (n = " +
                             std::to_string(n) + ")");

    ModalBasis basis;
    basis.lambda = es.eigenvalues().head(r);
    basis.phi = dinv_sqrt.asDiagonal() * es.eigenvectors().leftCols(r);
    return basis;
}

// Shift-invert Lanczos in the M inner product on (K - sigma*M)^-1 M with full
// reorthogonalization. M diagonal. Largest Ritz values of the operator map to
// the eigenvalues closest above sigma.
ModalBasis lanczos_solve(const fem::SystemMatrices& sys, int r,
                         const ModalOptions& opts) {
    const Eigen::Index n = sys.stiffness.rows();
    const Eigen::VectorXd& mass = sys.mass;
    const auto& kern = simd::active_kernels();

    // K is positive definite once >= 3 non-collinear nodes are anchored; a
    // small negative shift keeps the factorization definite otherwise. The
    // pivot test guards against singular K slipping through LDLT.
    double sigma = 0.0;
    Eigen::SparseMatrix<double> shifted = sys.stiffness;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor;
    factor.compute(shifted);
    bool spd = factor.info() == Eigen::Success;
    if (spd) {
        const auto& d = factor.vectorD();
        spd = d.minCoeff() > 1e-12 * d.maxCoeff();
    }
    if (!spd) {
        sigma = -1e-4 * spectral_scale_estimate(sys);
        Eigen::SparseMatrix<double> mdiag(n, n);
        mdiag.setIdentity();
        for (Eigen::Index i = 0; i < n; ++i)
            mdiag.coeffRef(i, i) = mass[i];
        shifted = sys.stiffness - sigma * mdiag;
        factor.compute(shifted);
        if (factor.info() != Eigen::Success)
            throw NumericalError("shift-invert factorization failed");
    }

    const int max_subspace =
        opts.max_subspace > 0
            ? std::min<int>(opts.max_subspace, static_cast<int>(n))
            : static_cast<int>(std::min<Eigen::Index>(n, std::max(6 * r + 60, 600)));
    int m = static_cast<int>(std::min<Eigen::Index>(n, std::max(2 * r + 30, 60)));

    Eigen::MatrixXd v(n, m + 1); // grows only if the first sweep fails to converge
    std::vector<double> alpha, beta;
    alpha.reserve(max_subspace);
    beta.reserve(max_subspace);

    std::mt19937_64 rng(opts.lanczos_seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    {
        Eigen::VectorXd v0(n);
        for (Eigen::Index i = 0; i < n; ++i)
            v0[i] = dist(rng);
        v0 /= std::sqrt(v0.dot(mass.cwiseProduct(v0)));
        v.col(0) = v0;
    }

    Eigen::VectorXd w(n), mw(n), h;
    int built = 0;

    auto extend_factorization = [&](int target) {
        for (int j = built; j < target; ++j) {
            mw = mass.cwiseProduct(v.col(j));
            w = factor.solve(mw);
            const double a = w.dot(mass.cwiseProduct(v.col(j)));
            alpha.push_back(a);
            w -= a * v.col(j);
            if (j > 0)
                w -= beta[j - 1] * v.col(j - 1);

            // full reorthogonalization, two passes
            h.resize(j + 1);
            for (int pass = 0; pass < 2; ++pass) {
                mw = mass.cwiseProduct(w);
                kern.matvec_t(v.data(), static_cast<std::size_t>(n),
                              static_cast<std::size_t>(j + 1), mw.data(), h.data());
                Eigen::VectorXd correction(n);
                kern.matvec(v.data(), static_cast<std::size_t>(n),
                            static_cast<std::size_t>(j + 1), h.data(), correction.data());
                w -= correction;
            }

            double b = std::sqrt(std::max(0.0, w.dot(mass.cwiseProduct(w))));
            if (b < 1e-300) {
                // invariant subspace exhausted; restart with a fresh direction
                Eigen::VectorXd fresh(n);
                for (Eigen::Index i = 0; i < n; ++i)
                    fresh[i] = dist(rng);
                for (int pass = 0; pass < 2; ++pass) {
                    mw = mass.cwiseProduct(fresh);
                    h.resize(j + 1);
                    kern.matvec_t(v.data(), static_cast<std::size_t>(n),
                                  static_cast<std::size_t>(j + 1), mw.data(), h.data());
                    Eigen::VectorXd correction(n);
                    kern.matvec(v.data(), static_cast<std::size_t>(n),
                                static_cast<std::size_t>(j + 1), h.data(), correction.data());
                    fresh -= correction;
                }
                const double fn = std::sqrt(fresh.dot(mass.cwiseProduct(fresh)));
                if (fn < 1e-300)
                    throw NumericalError("Lanczos breakdown: subspace exhausted at step " +
                                         std::to_string(j));
                w = fresh / fn;
                b = 0.0;
            } else {
                w /= b;
            }
            beta.push_back(b);
            v.col(j + 1) = w;
        }
        built = target;
    };

    while (true) {
        extend_factorization(m);

        Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            tri(i, i) = alpha[i];
            if (i + 1 < m) {
                tri(i, i + 1) = beta[i];
                tri(i + 1, i) = beta[i];
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
        if (es.info() != Eigen::Success)
            throw NumericalError("tridiagonal eigensolver failed at subspace size " +
                                 std::to_string(m));

        // largest theta <-> smallest lambda
        struct Pair {
            double lambda;
            int index;
        };
        std::vector<Pair> pairs;
        for (int i = m - 1; i >= 0 && static_cast<int>(pairs.size()) < r; --i) {
            const double theta = es.eigenvalues()[i];
            if (theta <= 0)
                break;
            pairs.push_back({sigma + 1.0 / theta, i});
        }

        bool converged = static_cast<int>(pairs.size()) == r;
        double worst_residual = 0.0;
        Eigen::MatrixXd phi;
        Eigen::VectorXd lambda;
        if (converged) {
            phi.resize(n, r);
            lambda.resize(r);
            for (int i = 0; i < r; ++i) {
                lambda[i] = pairs[i].lambda;
                phi.col(i) = v.leftCols(m) * es.eigenvectors().col(pairs[i].index);
            }
            // backward-error bound scaled by the operator norms so zero
            // eigenvalues (rigid modes) remain testable
            const double k_scale = spectral_scale_estimate(sys) * mass.maxCoeff();
            for (int i = 0; i < r && converged; ++i) {
                const Eigen::VectorXd kx = sys.stiffness * phi.col(i);
                const Eigen::VectorXd mx = mass.cwiseProduct(phi.col(i));
                const double res = (kx - lambda[i] * mx).norm();
                const double denom =
                    (k_scale + std::abs(lambda[i]) * mass.maxCoeff()) * phi.col(i).norm() +
                    1e-300;
                worst_residual = std::max(worst_residual, res / denom);
                if (res / denom > opts.residual_tol)
                    converged = false;
            }
        }

        if (converged) {
            std::vector<int> order(r);
            for (int i = 0; i < r; ++i)
                order[i] = i;
            std::sort(order.begin(), order.end(),
                      [&](int a, int b) { return lambda[a] < lambda[b]; });
            ModalBasis basis;
            basis.lambda.resize(r);
            basis.phi.resize(n, r);
            for (int i = 0; i < r; ++i) {
                basis.lambda[i] = lambda[order[i]];
                basis.phi.col(i) = phi.col(order[i]);
            }
            return basis;
        }

        if (m >= max_subspace)
            throw NumericalError(
                "Lanczos did not converge: subspace " + std::to_string(m) + "/" +
                std::to_string(max_subspace) + ", worst relative residual " +
                std::to_string(worst_residual) + " (tolerance " +
                std::to_string(opts.residual_tol) + ")");
        m = std::min(max_subspace, m + std::max(m / 2, 10));
        if (v.cols() < m + 1)
            v.conservativeResize(Eigen::NoChange, m + 1);
    }
}

} // namespace

ModalBasis compute_modal_basis(const fem::SystemMatrices& matrices, int r,
                               const ModalOptions& options) {
    const Eigen::Index n = matrices.stiffness.rows();
    if (r < 1)
        throw ValidationError("mode count must be >= 1");
    if (r > n)
        throw ValidationError("mode count " + std::to_string(r) +
                              " exceeds free DOF count " + std::to_string(n));

    ModalBasis basis = (n <= options.dense_threshold || r == n)
                           ? dense_solve(matrices, r)
                           : lanczos_solve(matrices, r, options);

    mass_normalize(basis.phi, matrices.mass);
    fix_column_signs(basis.phi);
    basis.clamped_modes =
        clamp_small_eigenvalues(basis.lambda, spectral_scale_estimate(matrices));
    return basis;
}

Eigen::VectorXd reconstruct_displacement(const ModalBasis& basis,
                                         const Eigen::VectorXd& q) {
    if (q.size() != basis.mode_count())
        throw ValidationError("reconstruct_displacement: q has length " +
                              std::to_string(q.size()) + ", basis has " +
                              std::to_string(basis.mode_count()) + " modes");
    Eigen::VectorXd u(basis.phi.rows());
    simd::active_kernels().matvec(basis.phi.data(),
                                  static_cast<std::size_t>(basis.phi.rows()),
                                  static_cast<std::size_t>(basis.phi.cols()),
                                  q.data(), u.data());
    return u;
}

Eigen::VectorXd reduce_force(const ModalBasis& basis, const Eigen::VectorXd& f) {
    if (f.size() != basis.phi.rows())
        throw ValidationError("reduce_force: force has length " + std::to_string(f.size()) +
                              ", basis has " + std::to_string(basis.phi.rows()) +
                              " free DOFs");
    Eigen::VectorXd q(basis.mode_count());
    simd::active_kernels().matvec_t(basis.phi.data(),
                                    static_cast<std::size_t>(basis.phi.rows()),
                                    static_cast<std::size_t>(basis.phi.cols()),
                                    f.data(), q.data());
    return q;
}

// --- basis cache -------------------------------------------------------------

namespace {

constexpr char kCacheMagic[8] = {'M', 'S', 'B', 'C', '0', '0', '0', '1'};

struct Fnv1a {
    std::uint64_t state = 0xcbf29ce484222325ull;

    void feed(const void* data, std::size_t size) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            state ^= bytes[i];
            state *= 0x100000001b3ull;
        }
    }
    template <typename T>
    void feed_value(const T& value) {
        feed(&value, sizeof(T));
    }
};

} // namespace

std::uint64_t system_content_hash(const mesh::TetMesh& mesh,
                                  const fem::MaterialParams& material,
                                  const mesh::NodeSelection& anchors) {
    Fnv1a hash;
    hash.feed_value(mesh.node_count());
    for (const auto& p : mesh.nodes) {
        hash.feed_value(p.x());
        hash.feed_value(p.y());
        hash.feed_value(p.z());
    }
    hash.feed_value(mesh.tet_count());
    for (const auto& tet : mesh.tets)
        hash.feed(tet.data(), sizeof(int) * 4);
    hash.feed_value(material.young_modulus);
    hash.feed_value(material.poisson_ratio);
    hash.feed_value(material.density);
    std::vector<int> sorted_anchors = anchors.ids;
    std::sort(sorted_anchors.begin(), sorted_anchors.end());
    hash.feed_value(sorted_anchors.size());
    hash.feed(sorted_anchors.data(), sorted_anchors.size() * sizeof(int));
    return hash.state;
}

void save_basis_cache(const std::string& path, std::uint64_t content_hash,
                      const ModalBasis& basis) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write basis cache: " + path);
    const std::int64_t rows = basis.phi.rows();
    const std::int64_t modes = basis.mode_count();
    out.write(kCacheMagic, sizeof(kCacheMagic));
    out.write(reinterpret_cast<const char*>(&content_hash), sizeof(content_hash));
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&modes), sizeof(modes));
    out.write(reinterpret_cast<const char*>(basis.lambda.data()),
              static_cast<std::streamsize>(sizeof(double) * modes));
    out.write(reinterpret_cast<const char*>(basis.phi.data()),
              static_cast<std::streamsize>(sizeof(double) * rows * modes));
    if (!out)
        throw IoError("write failed: " + path);
}

std::optional<ModalBasis> load_basis_cache(const std::string& path,
                                           std::uint64_t content_hash, int r) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        return std::nullopt;
    char magic[sizeof(kCacheMagic)];
    std::uint64_t stored_hash = 0;
    std::int64_t rows = 0, modes = 0;
    in.read(magic, sizeof(magic));
    in.read(reinterpret_cast<char*>(&stored_hash), sizeof(stored_hash));
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&modes), sizeof(modes));
    if (!in || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0)
        return std::nullopt;
    if (stored_hash != content_hash || modes < r || rows <= 0)
        return std::nullopt;

    ModalBasis full;
    full.lambda.resize(modes);
    full.phi.resize(rows, modes);
    in.read(reinterpret_cast<char*>(full.lambda.data()),
            static_cast<std::streamsize>(sizeof(double) * modes));
    in.read(reinterpret_cast<char*>(full.phi.data()),
            static_cast<std::streamsize>(sizeof(double) * rows * modes));
    if (!in)
        return std::nullopt;

    if (modes == r)
        return full;
    ModalBasis sliced;
    sliced.lambda = full.lambda.head(r);
    sliced.phi = full.phi.leftCols(r);
    return sliced;
}

} // namespace modalsim::modal
