#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "modalsim/mesh/tet_mesh.hpp"

namespace modalsim::fitting {

// Manually extracted section contour, plane coordinates in mm.
struct ContourPolyline {
    mesh::Plane plane = mesh::Plane::midsagittal;
    std::vector<Eigen::Vector2d> points;
    bool closed = false;

    void validate() const;
};

// CSV: first data line names the plane ("midsagittal" or "coronal",
// optionally ",closed"), then one "x_mm,y_mm" line per point.
ContourPolyline load_contour_csv(const std::string& path);
void save_contour_csv(const ContourPolyline& contour, const std::string& path);

struct SnakeParams {
    double alpha = 0.1;             // tension
    double beta = 0.1;              // bending
    double gamma = 0.2;             // step size
    double attraction_weight = 1.0; // pull toward the target contour
    int max_iterations = 200;
    double convergence_tol = 1e-3;  // max per-point move, plane units
    bool semi_implicit = false;     // pentadiagonal solve for the internal terms
    // Open chains hold their endpoints fixed so tension cannot slide the
    // contour along itself; closed contours ignore this.
    bool fix_endpoints = true;
};

struct SnakeResult {
    std::vector<Eigen::Vector2d> points;
    std::vector<Eigen::Vector2d> displacements; // final - initial
    std::vector<double> residuals;              // per-point distance to target
    int iterations = 0;
    double final_energy = 0.0;
};

// Minimizes tension + bending + squared distance to the target polyline.
// Energy is checked every iteration and must not increase; stops when the
// max per-point move drops below convergence_tol.
SnakeResult snake_fit(const std::vector<Eigen::Vector2d>& control_points,
                      const ContourPolyline& target, const SnakeParams& params);

double snake_energy(const std::vector<Eigen::Vector2d>& points,
                    const ContourPolyline& target, const SnakeParams& params,
                    bool closed);

Eigen::Vector2d closest_point_on_polyline(const Eigen::Vector2d& p,
                                          const std::vector<Eigen::Vector2d>& polyline,
                                          bool closed);

} // namespace modalsim::fitting
