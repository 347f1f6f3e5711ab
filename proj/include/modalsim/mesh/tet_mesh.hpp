#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace modalsim::mesh {

// Anatomical section planes of the model frame. The model frame is
// x = left-right, y = front-back, z = up, so the midsagittal plane has
// normal +x and the coronal plane has normal +y.
enum class Plane { midsagittal, coronal };

// Axis index of the plane normal (0 for midsagittal, 1 for coronal).
int plane_normal_axis(Plane plane);

// The two in-plane axis indices, in the order used to sort selections.
std::array<int, 2> plane_in_plane_axes(Plane plane);

enum class NodeRole { anchor, constraint, free_node };

struct NodeSelection {
    NodeRole role = NodeRole::free_node;
    std::vector<int> ids;
};

// Rest geometry: node positions (meters) plus tetrahedral connectivity.
// Immutable after construction. Every tet has strictly positive signed
// volume under the ordering det(x1-x0, x2-x0, x3-x0) > 0; loaders repair
// inverted tets by swapping the last two indices.
struct TetMesh {
    std::vector<Eigen::Vector3d> nodes;
    std::vector<std::array<int, 4>> tets;

    int node_count() const { return static_cast<int>(nodes.size()); }
    int tet_count() const { return static_cast<int>(tets.size()); }
};

double tet_signed_volume(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                         const Eigen::Vector3d& c, const Eigen::Vector3d& d);

// Enforces all TetMesh invariants in place. Inverted tets are reordered when
// fix_orientation is set; degenerate or out-of-range tets throw.
void validate_tet_mesh(TetMesh& mesh, bool fix_orientation);

// TetGen-style plain text pair. Node file: header "<count> 3 0 0" then
// "<idx> <x> <y> <z>"; ele file: header "<count> 4 0" then
// "<idx> <n0> <n1> <n2> <n3>". 0- or 1-based indexing is auto-detected from
// the minimum index; '#' starts a comment.
TetMesh load_tet_mesh(const std::string& node_path, const std::string& ele_path);

// Writes 0-based files that round-trip bit-identically through load_tet_mesh.
void save_tet_mesh(const TetMesh& mesh, const std::string& node_path,
                   const std::string& ele_path);

// Regular nx x ny x nz grid of hexahedral cells, each split into 6 tets.
// Total volume is exactly nx*ny*nz*dx*dy*dz.
TetMesh make_bar_mesh(int nx, int ny, int nz, double dx, double dy, double dz);

double total_volume(const TetMesh& mesh);

// Volume of the displaced configuration; displacements is the flattened
// per-node field (x0,y0,z0, x1,y1,z1, ...) of length 3*node_count.
double total_volume(const TetMesh& mesh, const Eigen::VectorXd& displacements);

// Boundary triangles (faces shared by exactly one tet), oriented outward.
std::vector<std::array<int, 3>> surface_triangles(const TetMesh& mesh);

// Sorted unique node ids appearing in any boundary triangle.
std::vector<int> surface_nodes(const TetMesh& mesh);

// Surface nodes whose plane-normal coordinate lies within tolerance of
// plane_coordinate, sorted by the in-plane axes (first axis, then second).
// Throws if the selection is empty.
NodeSelection select_plane_nodes(const TetMesh& mesh, Plane plane,
                                 double plane_coordinate, double tolerance,
                                 NodeRole role);

// Same filter on an arbitrary coordinate axis (0, 1, 2), sorted by the two
// remaining axes in ascending index order.
NodeSelection select_axis_nodes(const TetMesh& mesh, int axis, double coordinate,
                                double tolerance, NodeRole role);

// Anchor and constraint selections must not overlap.
void ensure_disjoint(const NodeSelection& anchors, const NodeSelection& constraints);

} // namespace modalsim::mesh
