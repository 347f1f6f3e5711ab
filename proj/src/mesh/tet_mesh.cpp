#include "modalsim/mesh/tet_mesh.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_set>

#include "modalsim/error.hpp"

namespace modalsim::mesh {

namespace {

constexpr double kDegenerateVolume = 1e-18; // m^3

std::string location(const std::string& path, int line) {
    return path + ":" + std::to_string(line);
}

// Lines of whitespace-separated tokens; '#' starts a comment; blank lines skipped.
class TokenLineReader {
public:
    explicit TokenLineReader(const std::string& path) : path_(path), in_(path) {
        if (!in_)
            throw IoError("cannot open file: " + path);
    }

    bool next(std::vector<std::string>& tokens) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_number_;
            const auto hash = line.find('#');
            if (hash != std::string::npos)
                line.erase(hash);
            std::istringstream ss(line);
            tokens.clear();
            std::string tok;
            while (ss >> tok)
                tokens.push_back(tok);
            if (!tokens.empty())
                return true;
        }
        return false;
    }

    int line_number() const { return line_number_; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ifstream in_;
    int line_number_ = 0;
};

long parse_long(const std::string& tok, const TokenLineReader& reader) {
    std::size_t pos = 0;
    long value = 0;
    try {
        value = std::stol(tok, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != tok.size())
        throw ValidationError("parse error at " + location(reader.path(), reader.line_number()) +
                              ": expected integer, got '" + tok + "'");
    return value;
}

double parse_double(const std::string& tok, const TokenLineReader& reader) {
    std::size_t pos = 0;
    double value = 0;
    try {
        value = std::stod(tok, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != tok.size())
        throw ValidationError("parse error at " + location(reader.path(), reader.line_number()) +
                              ": expected number, got '" + tok + "'");
    return value;
}

struct FaceKey {
    std::array<int, 3> sorted;
    bool operator<(const FaceKey& o) const { return sorted < o.sorted; }
};

FaceKey face_key(int a, int b, int c) {
    std::array<int, 3> k{a, b, c};
    std::sort(k.begin(), k.end());
    return {k};
}

} // namespace

int plane_normal_axis(Plane plane) {
    return plane == Plane::midsagittal ? 0 : 1;
}

std::array<int, 2> plane_in_plane_axes(Plane plane) {
    return plane == Plane::midsagittal ? std::array<int, 2>{1, 2}
                                       : std::array<int, 2>{0, 2};
}

double tet_signed_volume(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                         const Eigen::Vector3d& c, const Eigen::Vector3d& d) {
    return (b - a).cross(c - a).dot(d - a) / 6.0;
}

void validate_tet_mesh(TetMesh& mesh, bool fix_orientation) {
    const int n = mesh.node_count();
    if (n == 0)
        throw ValidationError("mesh has no nodes");
    if (mesh.tets.empty())
        throw ValidationError("mesh has no tets");

    for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
        auto& tet = mesh.tets[t];
        for (int v : tet) {
            if (v < 0 || v >= n)
                throw ValidationError("structural error: tet " + std::to_string(t) +
                                      " references node " + std::to_string(v) +
                                      " outside [0, " + std::to_string(n) + ")");
        }
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j)
                if (tet[i] == tet[j])
                    throw ValidationError("structural error: tet " + std::to_string(t) +
                                          " has repeated node " + std::to_string(tet[i]));

        double vol = tet_signed_volume(mesh.nodes[tet[0]], mesh.nodes[tet[1]],
                                       mesh.nodes[tet[2]], mesh.nodes[tet[3]]);
        if (vol < 0 && fix_orientation) {
            std::swap(tet[2], tet[3]);
            vol = -vol;
        }
        if (vol < kDegenerateVolume)
            throw ValidationError("degenerate element: tet " + std::to_string(t) +
                                  " has volume " + std::to_string(vol) + " m^3");
    }
}

TetMesh load_tet_mesh(const std::string& node_path, const std::string& ele_path) {
    TetMesh mesh;
    std::vector<std::string> tokens;

    {
        TokenLineReader reader(node_path);
        if (!reader.next(tokens) || tokens.size() < 2)
            throw ValidationError("parse error at " + location(node_path, reader.line_number()) +
                                  ": expected node header '<count> 3 0 0'");
        const long count = parse_long(tokens[0], reader);
        const long dim = parse_long(tokens[1], reader);
        if (count < 1 || dim != 3)
            throw ValidationError("parse error at " + location(node_path, reader.line_number()) +
                                  ": node header must declare a positive count and dimension 3");

        std::vector<long> indices;
        indices.reserve(count);
        mesh.nodes.reserve(count);
        while (reader.next(tokens)) {
            if (tokens.size() < 4)
                throw ValidationError("parse error at " + location(node_path, reader.line_number()) +
                                      ": expected '<idx> <x> <y> <z>'");
            indices.push_back(parse_long(tokens[0], reader));
            mesh.nodes.emplace_back(parse_double(tokens[1], reader),
                                    parse_double(tokens[2], reader),
                                    parse_double(tokens[3], reader));
        }
        if (static_cast<long>(mesh.nodes.size()) != count)
            throw ValidationError(node_path + ": header declares " + std::to_string(count) +
                                  " nodes but file contains " + std::to_string(mesh.nodes.size()));

        const long base = *std::min_element(indices.begin(), indices.end());
        if (base != 0 && base != 1)
            throw ValidationError(node_path + ": structural error: minimum node index " +
                                  std::to_string(base) + " (expected 0 or 1)");
        std::vector<char> seen(count, 0);
        for (long idx : indices) {
            const long z = idx - base;
            if (z < 0 || z >= count)
                throw ValidationError(node_path + ": structural error: node index " +
                                      std::to_string(idx) + " out of range");
            if (seen[z]++)
                throw ValidationError(node_path + ": structural error: duplicate node index " +
                                      std::to_string(idx));
        }
        // Node lines may appear in any order; place them by index.
        std::vector<Eigen::Vector3d> ordered(count);
        for (std::size_t i = 0; i < indices.size(); ++i)
            ordered[indices[i] - base] = mesh.nodes[i];
        mesh.nodes = std::move(ordered);
    }

    {
        TokenLineReader reader(ele_path);
        if (!reader.next(tokens) || tokens.size() < 2)
            throw ValidationError("parse error at " + location(ele_path, reader.line_number()) +
                                  ": expected ele header '<count> 4 0'");
        const long count = parse_long(tokens[0], reader);
        const long nodes_per_tet = parse_long(tokens[1], reader);
        if (count < 1 || nodes_per_tet != 4)
            throw ValidationError("parse error at " + location(ele_path, reader.line_number()) +
                                  ": ele header must declare a positive count and 4 nodes per tet");

        std::vector<std::array<long, 4>> raw;
        raw.reserve(count);
        long min_ref = std::numeric_limits<long>::max();
        while (reader.next(tokens)) {
            if (tokens.size() < 5)
                throw ValidationError("parse error at " + location(ele_path, reader.line_number()) +
                                      ": expected '<idx> <n0> <n1> <n2> <n3>'");
            std::array<long, 4> tet;
            for (int i = 0; i < 4; ++i) {
                tet[i] = parse_long(tokens[1 + i], reader);
                min_ref = std::min(min_ref, tet[i]);
            }
            raw.push_back(tet);
        }
        if (static_cast<long>(raw.size()) != count)
            throw ValidationError(ele_path + ": header declares " + std::to_string(count) +
                                  " tets but file contains " + std::to_string(raw.size()));

        const long base = (min_ref == 0) ? 0 : 1;
        mesh.tets.reserve(raw.size());
        for (const auto& tet : raw) {
            std::array<int, 4> t;
            for (int i = 0; i < 4; ++i) {
                const long z = tet[i] - base;
                if (z < 0 || z >= mesh.node_count())
                    throw ValidationError(ele_path + ": structural error: tet references node " +
                                          std::to_string(tet[i]) + " outside the node file");
                t[i] = static_cast<int>(z);
            }
            mesh.tets.push_back(t);
        }
    }

    validate_tet_mesh(mesh, /*fix_orientation=*/true);
    return mesh;
}

void save_tet_mesh(const TetMesh& mesh, const std::string& node_path,
                   const std::string& ele_path) {
    char buf[96];
    {
        std::ofstream out(node_path);
        if (!out)
            throw IoError("cannot write file: " + node_path);
        out << mesh.node_count() << " 3 0 0\n";
        for (int i = 0; i < mesh.node_count(); ++i) {
            const auto& p = mesh.nodes[i];
            std::snprintf(buf, sizeof(buf), "%d %.17g %.17g %.17g\n", i, p.x(), p.y(), p.z());
            out << buf;
        }
        if (!out)
            throw IoError("write failed: " + node_path);
    }
    {
        std::ofstream out(ele_path);
        if (!out)
            throw IoError("cannot write file: " + ele_path);
        out << mesh.tet_count() << " 4 0\n";
        for (int t = 0; t < mesh.tet_count(); ++t) {
            const auto& tet = mesh.tets[t];
            out << t << ' ' << tet[0] << ' ' << tet[1] << ' ' << tet[2] << ' ' << tet[3] << '\n';
        }
        if (!out)
            throw IoError("write failed: " + ele_path);
    }
}

TetMesh make_bar_mesh(int nx, int ny, int nz, double dx, double dy, double dz) {
    if (nx < 1 || ny < 1 || nz < 1)
        throw ValidationError("make_bar_mesh: cell counts must be >= 1");
    if (dx <= 0 || dy <= 0 || dz <= 0)
        throw ValidationError("make_bar_mesh: cell dimensions must be > 0");

    TetMesh mesh;
    const int px = nx + 1, py = ny + 1, pz = nz + 1;
    mesh.nodes.reserve(static_cast<std::size_t>(px) * py * pz);
    for (int k = 0; k < pz; ++k)
        for (int j = 0; j < py; ++j)
            for (int i = 0; i < px; ++i)
                mesh.nodes.emplace_back(i * dx, j * dy, k * dz);

    auto id = [&](int i, int j, int k) { return (k * py + j) * px + i; };

    // Kuhn split: six tets fanned around the main diagonal of each cell.
    static const int kCorners[6][4] = {
        {0b000, 0b100, 0b110, 0b111}, {0b000, 0b110, 0b010, 0b111},
        {0b000, 0b010, 0b011, 0b111}, {0b000, 0b011, 0b001, 0b111},
        {0b000, 0b001, 0b101, 0b111}, {0b000, 0b101, 0b100, 0b111},
    };

    mesh.tets.reserve(static_cast<std::size_t>(nx) * ny * nz * 6);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                for (const auto& corners : kCorners) {
                    std::array<int, 4> tet;
                    for (int v = 0; v < 4; ++v) {
                        const int c = corners[v];
                        tet[v] = id(i + ((c >> 2) & 1), j + ((c >> 1) & 1), k + (c & 1));
                    }
                    mesh.tets.push_back(tet);
                }

    validate_tet_mesh(mesh, /*fix_orientation=*/true);
    return mesh;
}

double total_volume(const TetMesh& mesh) {
    double vol = 0.0;
    for (const auto& tet : mesh.tets)
        vol += tet_signed_volume(mesh.nodes[tet[0]], mesh.nodes[tet[1]],
                                 mesh.nodes[tet[2]], mesh.nodes[tet[3]]);
    return vol;
}

double total_volume(const TetMesh& mesh, const Eigen::VectorXd& displacements) {
    if (displacements.size() == 0)
        return total_volume(mesh);
    if (displacements.size() != 3 * mesh.node_count())
        throw ValidationError("total_volume: displacement length " +
                              std::to_string(displacements.size()) + " != 3 * " +
                              std::to_string(mesh.node_count()));
    auto at = [&](int v) -> Eigen::Vector3d {
        return mesh.nodes[v] + displacements.segment<3>(3 * v);
    };
    double vol = 0.0;
    for (const auto& tet : mesh.tets)
        vol += tet_signed_volume(at(tet[0]), at(tet[1]), at(tet[2]), at(tet[3]));
    return vol;
}

std::vector<std::array<int, 3>> surface_triangles(const TetMesh& mesh) {
    // Outward-oriented faces of a positively oriented tet (v0,v1,v2,v3).
    static const int kFaces[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};

    std::map<FaceKey, int> counts;
    for (const auto& tet : mesh.tets)
        for (const auto& f : kFaces)
            ++counts[face_key(tet[f[0]], tet[f[1]], tet[f[2]])];

    std::vector<std::array<int, 3>> tris;
    for (const auto& tet : mesh.tets)
        for (const auto& f : kFaces) {
            const std::array<int, 3> tri{tet[f[0]], tet[f[1]], tet[f[2]]};
            if (counts.at(face_key(tri[0], tri[1], tri[2])) == 1)
                tris.push_back(tri);
        }
    return tris;
}

std::vector<int> surface_nodes(const TetMesh& mesh) {
    std::unordered_set<int> set;
    for (const auto& tri : surface_triangles(mesh))
        set.insert(tri.begin(), tri.end());
    std::vector<int> ids(set.begin(), set.end());
    std::sort(ids.begin(), ids.end());
    return ids;
}

NodeSelection select_axis_nodes(const TetMesh& mesh, int axis, double coordinate,
                                double tolerance, NodeRole role) {
    if (axis < 0 || axis > 2)
        throw ValidationError("select_axis_nodes: axis must be 0, 1, or 2");
    if (tolerance < 0)
        throw ValidationError("select_axis_nodes: tolerance must be >= 0");

    NodeSelection sel;
    sel.role = role;
    for (int id : surface_nodes(mesh))
        if (std::abs(mesh.nodes[id][axis] - coordinate) <= tolerance)
            sel.ids.push_back(id);

    if (sel.ids.empty())
        throw ValidationError("node selection is empty at coordinate " +
                              std::to_string(coordinate) + " (tolerance " +
                              std::to_string(tolerance) + ")");

    std::array<int, 2> axes{};
    int w = 0;
    for (int a = 0; a < 3; ++a)
        if (a != axis)
            axes[w++] = a;
    std::sort(sel.ids.begin(), sel.ids.end(), [&](int a, int b) {
        const auto& pa = mesh.nodes[a];
        const auto& pb = mesh.nodes[b];
        if (pa[axes[0]] != pb[axes[0]])
            return pa[axes[0]] < pb[axes[0]];
        if (pa[axes[1]] != pb[axes[1]])
            return pa[axes[1]] < pb[axes[1]];
        return a < b;
    });
    return sel;
}

NodeSelection select_plane_nodes(const TetMesh& mesh, Plane plane,
                                 double plane_coordinate, double tolerance,
                                 NodeRole role) {
    return select_axis_nodes(mesh, plane_normal_axis(plane), plane_coordinate,
                             tolerance, role);
}

void ensure_disjoint(const NodeSelection& anchors, const NodeSelection& constraints) {
    std::unordered_set<int> anchor_set(anchors.ids.begin(), anchors.ids.end());
    for (int id : constraints.ids)
        if (anchor_set.count(id))
            throw ValidationError("node " + std::to_string(id) +
                                  " is both anchored and constrained");
}

} // namespace modalsim::mesh
