#include "modalsim/fitting/snake.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "modalsim/error.hpp"

namespace modalsim::fitting {

void ContourPolyline::validate() const {
    if (points.size() < 2)
        throw ValidationError("contour needs at least 2 points");
    const std::size_t n = points.size();
    const std::size_t segments = closed ? n : n - 1;
    for (std::size_t i = 0; i < segments; ++i)
        if ((points[(i + 1) % n] - points[i]).norm() == 0.0)
            throw ValidationError("contour has coincident consecutive points at index " +
                                  std::to_string(i));
}

ContourPolyline load_contour_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open contour file: " + path);

    ContourPolyline contour;
    std::string line;
    int line_number = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        // trim
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
            line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos)
            continue;
        line.erase(0, start);

        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ','))
            fields.push_back(field);

        if (!header_seen) {
            if (fields.empty())
                continue;
            const std::string& plane = fields[0];
            if (plane == "midsagittal")
                contour.plane = mesh::Plane::midsagittal;
            else if (plane == "coronal")
                contour.plane = mesh::Plane::coronal;
            else
                throw ValidationError(path + ":" + std::to_string(line_number) +
                                      ": contour header must name the plane "
                                      "(midsagittal or coronal), got '" + plane + "'");
            contour.closed = fields.size() > 1 && fields[1] == "closed";
            header_seen = true;
            continue;
        }

        if (fields.size() < 2)
            throw ValidationError(path + ":" + std::to_string(line_number) +
                                  ": expected 'x_mm,y_mm'");
        try {
            contour.points.emplace_back(std::stod(fields[0]), std::stod(fields[1]));
        } catch (const std::exception&) {
            throw ValidationError(path + ":" + std::to_string(line_number) +
                                  ": expected 'x_mm,y_mm', got '" + line + "'");
        }
    }
    if (!header_seen)
        throw ValidationError(path + ": missing plane header line");
    contour.validate();
    return contour;
}

void save_contour_csv(const ContourPolyline& contour, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write contour file: " + path);
    out << (contour.plane == mesh::Plane::midsagittal ? "midsagittal" : "coronal");
    if (contour.closed)
        out << ",closed";
    out << '\n';
    char buf[80];
    for (const auto& p : contour.points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.x(), p.y());
        out << buf;
    }
}

Eigen::Vector2d closest_point_on_polyline(const Eigen::Vector2d& p,
                                          const std::vector<Eigen::Vector2d>& polyline,
                                          bool closed) {
    const std::size_t n = polyline.size();
    const std::size_t segments = closed ? n : n - 1;
    double best_dist2 = std::numeric_limits<double>::infinity();
    Eigen::Vector2d best = polyline.front();
    for (std::size_t i = 0; i < segments; ++i) {
        const Eigen::Vector2d& a = polyline[i];
        const Eigen::Vector2d& b = polyline[(i + 1) % n];
        const Eigen::Vector2d ab = b - a;
        const double len2 = ab.squaredNorm();
        double t = len2 > 0 ? (p - a).dot(ab) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const Eigen::Vector2d candidate = a + t * ab;
        const double d2 = (p - candidate).squaredNorm();
        if (d2 < best_dist2) {
            best_dist2 = d2;
            best = candidate;
        }
    }
    return best;
}

namespace {

// Wrapped neighbors for closed contours, clamped second differences for open
// chains (free ends).
struct Topology {
    int n = 0;
    bool closed = false;

    int prev(int i) const { return closed ? (i + n - 1) % n : std::max(i - 1, 0); }
    int next(int i) const { return closed ? (i + 1) % n : std::min(i + 1, n - 1); }
    bool has_prev(int i) const { return closed || i > 0; }
    bool has_next(int i) const { return closed || i + 1 < n; }
};

double internal_energy(const std::vector<Eigen::Vector2d>& pts, const Topology& topo,
                       double alpha, double beta) {
    double e = 0.0;
    for (int i = 0; i < topo.n; ++i) {
        if (topo.has_next(i))
            e += alpha * (pts[topo.next(i)] - pts[i]).squaredNorm();
        if (topo.has_prev(i) && topo.has_next(i))
            e += beta * (pts[topo.next(i)] - 2 * pts[i] + pts[topo.prev(i)]).squaredNorm();
    }
    return e;
}

// Quadratic form matrix of the internal energy: E_int = p^T A p per coordinate.
Eigen::SparseMatrix<double> internal_matrix(const Topology& topo, double alpha,
                                            double beta) {
    std::vector<Eigen::Triplet<double>> trip;
    auto add = [&](int i, int j, double v) { trip.emplace_back(i, j, v); };
    for (int i = 0; i < topo.n; ++i) {
        if (topo.has_next(i)) {
            const int j = topo.next(i);
            add(i, i, alpha);
            add(j, j, alpha);
            add(i, j, -alpha);
            add(j, i, -alpha);
        }
        if (topo.has_prev(i) && topo.has_next(i)) {
            const int p = topo.prev(i), nx = topo.next(i);
            const int idx[3] = {nx, i, p};
            const double coef[3] = {1.0, -2.0, 1.0};
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    add(idx[a], idx[b], beta * coef[a] * coef[b]);
        }
    }
    Eigen::SparseMatrix<double> m(topo.n, topo.n);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

} // namespace

double snake_energy(const std::vector<Eigen::Vector2d>& points,
                    const ContourPolyline& target, const SnakeParams& params,
                    bool closed) {
    Topology topo{static_cast<int>(points.size()), closed};
    double e = internal_energy(points, topo, params.alpha, params.beta);
    for (const auto& p : points) {
        const Eigen::Vector2d cp = closest_point_on_polyline(p, target.points, target.closed);
        e += params.attraction_weight * (p - cp).squaredNorm();
    }
    return e;
}

SnakeResult snake_fit(const std::vector<Eigen::Vector2d>& control_points,
                      const ContourPolyline& target, const SnakeParams& params) {
    if (control_points.size() < 2)
        throw ValidationError("snake_fit: need at least 2 control points");
    target.validate();
    if (!(params.alpha >= 0 && params.beta >= 0 && params.attraction_weight >= 0))
        throw ValidationError("snake_fit: weights must be >= 0");
    if (params.max_iterations < 1)
        throw ValidationError("snake_fit: max_iterations must be >= 1");
    if (!(params.convergence_tol > 0))
        throw ValidationError("snake_fit: convergence_tol must be > 0");
    if (!(params.gamma > 0))
        throw ValidationError("snake_fit: gamma must be > 0");
    for (const auto& p : control_points)
        if (!p.allFinite())
            throw NumericalError("snake_fit: non-finite control point");
    for (const auto& p : target.points)
        if (!p.allFinite())
            throw NumericalError("snake_fit: non-finite target point");

    // Control points inherit the closed/open topology of the target.
    const bool closed = target.closed;
    const int n = static_cast<int>(control_points.size());
    Topology topo{n, closed};

    std::vector<Eigen::Vector2d> pts = control_points;
    double energy = snake_energy(pts, target, params, closed);

    // E_int = p^T A p per coordinate, so grad E_int = 2 A p.
    const Eigen::SparseMatrix<double> internal =
        internal_matrix(topo, params.alpha, params.beta);

    auto pinned = [&](int i) {
        return !closed && params.fix_endpoints && (i == 0 || i == n - 1);
    };

    // Semi-implicit option: (I + 2*gamma*A) p_new = p - gamma * grad E_ext,
    // with pinned rows replaced by the identity.
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    if (params.semi_implicit) {
        Eigen::SparseMatrix<double> sys = 2.0 * params.gamma * internal;
        Eigen::SparseMatrix<double> eye(n, n);
        eye.setIdentity();
        sys = (sys + eye).eval();
        if (params.fix_endpoints && !closed) {
            sys = sys.pruned();
            Eigen::MatrixXd dense = Eigen::MatrixXd(sys);
            dense.row(0).setZero();
            dense.row(n - 1).setZero();
            dense(0, 0) = 1.0;
            dense(n - 1, n - 1) = 1.0;
            sys = dense.sparseView();
        }
        lu.compute(sys);
        if (lu.info() != Eigen::Success)
            throw NumericalError("snake_fit: internal-term factorization failed");
    }

    SnakeResult result;
    Eigen::VectorXd px(n), py(n), rhs_x(n), rhs_y(n);
    int iter = 0;
    for (; iter < params.max_iterations; ++iter) {
        std::vector<Eigen::Vector2d> next(n);

        for (int i = 0; i < n; ++i) {
            const Eigen::Vector2d cp =
                closest_point_on_polyline(pts[i], target.points, target.closed);
            const Eigen::Vector2d g_ext = 2.0 * params.attraction_weight * (pts[i] - cp);
            px[i] = pts[i].x();
            py[i] = pts[i].y();
            rhs_x[i] = pts[i].x() - params.gamma * g_ext.x();
            rhs_y[i] = pts[i].y() - params.gamma * g_ext.y();
            if (pinned(i)) {
                rhs_x[i] = pts[i].x();
                rhs_y[i] = pts[i].y();
            }
        }

        if (params.semi_implicit) {
            const Eigen::VectorXd sx = lu.solve(rhs_x);
            const Eigen::VectorXd sy = lu.solve(rhs_y);
            for (int i = 0; i < n; ++i)
                next[i] = {sx[i], sy[i]};
        } else {
            const Eigen::VectorXd gx = 2.0 * (internal * px);
            const Eigen::VectorXd gy = 2.0 * (internal * py);
            for (int i = 0; i < n; ++i)
                next[i] = pinned(i) ? pts[i]
                                    : Eigen::Vector2d(rhs_x[i] - params.gamma * gx[i],
                                                      rhs_y[i] - params.gamma * gy[i]);
        }

        double max_move = 0.0;
        for (int i = 0; i < n; ++i) {
            if (!next[i].allFinite())
                throw NumericalError("snake_fit: non-finite point at iteration " +
                                     std::to_string(iter));
            max_move = std::max(max_move, (next[i] - pts[i]).norm());
        }

        const double next_energy = snake_energy(next, target, params, closed);
        if (next_energy > energy * (1.0 + 1e-12) + 1e-15)
            throw NumericalError("snake_fit: energy increased at iteration " +
                                 std::to_string(iter) + " (" + std::to_string(energy) +
                                 " -> " + std::to_string(next_energy) +
                                 "); reduce gamma");

        pts = std::move(next);
        energy = next_energy;
        if (max_move < params.convergence_tol) {
            ++iter;
            break;
        }
    }

    result.points = pts;
    result.iterations = iter;
    result.final_energy = energy;
    result.displacements.resize(n);
    result.residuals.resize(n);
    for (int i = 0; i < n; ++i) {
        result.displacements[i] = pts[i] - control_points[i];
        result.residuals[i] =
            (pts[i] - closest_point_on_polyline(pts[i], target.points, target.closed)).norm();
    }
    return result;
}

} // namespace modalsim::fitting
