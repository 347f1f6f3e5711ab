#pragma once

#include <Eigen/Core>

#include "modalsim/mesh/tet_mesh.hpp"

namespace modalsim::tracking {

// Registration of a 2D image/contour plane into model space. Supplied by
// config, not estimated. Image x maps to axis1, image y to axis2; the axes
// must be orthonormal. Positions in the plane are in mm; model space is in
// meters.
struct PlaneCalibration {
    double mm_per_pixel = 1.0;
    Eigen::Vector2d origin_mm = Eigen::Vector2d::Zero(); // plane coords of model origin
    Eigen::Vector3d axis1 = Eigen::Vector3d::UnitY();
    Eigen::Vector3d axis2 = -Eigen::Vector3d::UnitZ();   // image y runs downward

    void validate() const;

    // Conventional axes for a section plane: midsagittal (normal +x) maps
    // plane coords to (y, z); coronal (normal +y) maps to (x, z).
    static PlaneCalibration for_plane(mesh::Plane plane);

    // 2D plane displacement in mm -> 3D model displacement in meters.
    Eigen::Vector3d lift_mm(const Eigen::Vector2d& disp_mm) const;

    // Model position -> 2D plane coordinates in mm.
    Eigen::Vector2d project_to_plane_mm(const Eigen::Vector3d& position_m) const;
};

} // namespace modalsim::tracking
