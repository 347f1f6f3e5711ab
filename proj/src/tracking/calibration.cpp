#include "modalsim/tracking/calibration.hpp"

#include "modalsim/error.hpp"

namespace modalsim::tracking {

void PlaneCalibration::validate() const {
    if (!(mm_per_pixel > 0))
        throw ValidationError("calibration: mm_per_pixel must be > 0");
    if (!origin_mm.allFinite() || !axis1.allFinite() || !axis2.allFinite())
        throw ValidationError("calibration: non-finite entries");
    const double tol = 1e-9;
    if (std::abs(axis1.norm() - 1.0) > tol || std::abs(axis2.norm() - 1.0) > tol ||
        std::abs(axis1.dot(axis2)) > tol)
        throw ValidationError("calibration: plane axes must be orthonormal");
}

PlaneCalibration PlaneCalibration::for_plane(mesh::Plane plane) {
    PlaneCalibration cal;
    const auto axes = mesh::plane_in_plane_axes(plane);
    cal.axis1 = Eigen::Vector3d::Unit(axes[0]);
    cal.axis2 = Eigen::Vector3d::Unit(axes[1]);
    return cal;
}

Eigen::Vector3d PlaneCalibration::lift_mm(const Eigen::Vector2d& disp_mm) const {
    return 1e-3 * (disp_mm.x() * axis1 + disp_mm.y() * axis2);
}

Eigen::Vector2d PlaneCalibration::project_to_plane_mm(const Eigen::Vector3d& position_m) const {
    return Eigen::Vector2d(axis1.dot(position_m), axis2.dot(position_m)) * 1e3 - origin_mm;
}

} // namespace modalsim::tracking
