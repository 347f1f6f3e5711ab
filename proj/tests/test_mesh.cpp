#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "modalsim/error.hpp"
#include "modalsim/mesh/tet_mesh.hpp"

using namespace modalsim;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "modalsim_mesh_tests";
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

// Reference tetrahedron (0,0,0),(1,0,0),(0,1,0),(0,0,1); volume 1/6.
void write_reference_tet(const fs::path& node, const fs::path& ele, bool inverted) {
    write_file(node,
               "4 3 0 0\n"
               "0 0 0 0\n"
               "1 1 0 0\n"
               "2 0 1 0\n"
               "3 0 0 1\n");
    write_file(ele, inverted ? "1 4 0\n0 0 1 3 2\n" : "1 4 0\n0 0 1 2 3\n");
}

// Independent surface-node oracle: enumerate all faces by brute force and
// keep those appearing exactly once.
std::set<int> brute_force_surface_nodes(const mesh::TetMesh& m) {
    std::map<std::array<int, 3>, int> count;
    for (const auto& tet : m.tets) {
        const int f[4][3] = {{tet[0], tet[1], tet[2]},
                             {tet[0], tet[1], tet[3]},
                             {tet[0], tet[2], tet[3]},
                             {tet[1], tet[2], tet[3]}};
        for (const auto& face : f) {
            std::array<int, 3> key{face[0], face[1], face[2]};
            std::sort(key.begin(), key.end());
            ++count[key];
        }
    }
    std::set<int> nodes;
    for (const auto& [key, c] : count)
        if (c == 1)
            nodes.insert(key.begin(), key.end());
    return nodes;
}

} // namespace

TEST_CASE("reference tet loads with volume 1/6") {
    const auto dir = temp_dir();
    write_reference_tet(dir / "ref.node", dir / "ref.ele", false);
    const auto m = mesh::load_tet_mesh((dir / "ref.node").string(), (dir / "ref.ele").string());
    CHECK(m.node_count() == 4);
    CHECK(m.tet_count() == 1);
    CHECK(mesh::total_volume(m) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("inverted tet is reordered on load") {
    const auto dir = temp_dir();
    write_reference_tet(dir / "inv.node", dir / "inv.ele", true);
    const auto m = mesh::load_tet_mesh((dir / "inv.node").string(), (dir / "inv.ele").string());
    CHECK(mesh::total_volume(m) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    const auto& tet = m.tets[0];
    CHECK(mesh::tet_signed_volume(m.nodes[tet[0]], m.nodes[tet[1]], m.nodes[tet[2]],
                                  m.nodes[tet[3]]) > 0);
}

TEST_CASE("out-of-range node reference is a structural error") {
    const auto dir = temp_dir();
    write_reference_tet(dir / "oob.node", dir / "oob.ele", false);
    write_file(dir / "oob.ele", "1 4 0\n0 0 1 2 99\n");
    CHECK_THROWS_WITH_AS(
        mesh::load_tet_mesh((dir / "oob.node").string(), (dir / "oob.ele").string()),
        doctest::Contains("99"), ValidationError);
}

TEST_CASE("malformed line reports the line number") {
    const auto dir = temp_dir();
    write_file(dir / "bad.node",
               "2 3 0 0\n"
               "0 0 0 0\n"
               "1 zero 0 0\n");
    write_file(dir / "bad.ele", "1 4 0\n0 0 0 1 1\n");
    CHECK_THROWS_WITH_AS(
        mesh::load_tet_mesh((dir / "bad.node").string(), (dir / "bad.ele").string()),
        doctest::Contains(":3"), ValidationError);
}

TEST_CASE("1-based files are detected and shifted") {
    const auto dir = temp_dir();
    write_file(dir / "one.node",
               "4 3 0 0\n"
               "1 0 0 0\n"
               "2 1 0 0\n"
               "3 0 1 0\n"
               "4 0 0 1\n");
    write_file(dir / "one.ele", "1 4 0\n1 1 2 3 4\n");
    const auto m = mesh::load_tet_mesh((dir / "one.node").string(), (dir / "one.ele").string());
    CHECK(m.tets[0] == std::array<int, 4>{0, 1, 2, 3});
}

TEST_CASE("degenerate tet is rejected") {
    const auto dir = temp_dir();
    write_file(dir / "flat.node",
               "4 3 0 0\n"
               "0 0 0 0\n"
               "1 1 0 0\n"
               "2 0 1 0\n"
               "3 1 1 0\n"); // coplanar
    write_file(dir / "flat.ele", "1 4 0\n0 0 1 2 3\n");
    CHECK_THROWS_WITH_AS(
        mesh::load_tet_mesh((dir / "flat.node").string(), (dir / "flat.ele").string()),
        doctest::Contains("degenerate"), ValidationError);
}

TEST_CASE("bar mesh counts and volumes") {
    const auto unit = mesh::make_bar_mesh(1, 1, 1, 1, 1, 1);
    CHECK(unit.node_count() == 8);
    CHECK(unit.tet_count() == 6);
    CHECK(mesh::total_volume(unit) == doctest::Approx(1.0).epsilon(1e-15));

    const auto quarters = mesh::make_bar_mesh(4, 1, 1, 0.25, 1, 1);
    CHECK(quarters.node_count() == 20);
    CHECK(mesh::total_volume(quarters) == doctest::Approx(1.0).epsilon(1e-12));

    const auto rod = mesh::make_bar_mesh(10, 2, 2, 0.1, 0.1, 0.1);
    CHECK(mesh::total_volume(rod) == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("bar mesh satisfies all invariants") {
    auto m = mesh::make_bar_mesh(3, 2, 4, 0.2, 0.3, 0.1);
    CHECK_NOTHROW(mesh::validate_tet_mesh(m, false));
    for (const auto& tet : m.tets)
        CHECK(mesh::tet_signed_volume(m.nodes[tet[0]], m.nodes[tet[1]], m.nodes[tet[2]],
                                      m.nodes[tet[3]]) > 0);
}

TEST_CASE("total volume under displacement") {
    const auto m = mesh::make_bar_mesh(2, 2, 2, 0.5, 0.5, 0.5);
    const double rest = mesh::total_volume(m);

    SUBCASE("zero displacement preserves volume exactly") {
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3 * m.node_count());
        CHECK(mesh::total_volume(m, zero) == rest);
    }
    SUBCASE("uniform scaling u = 0.1 x multiplies volume by 1.1^3") {
        Eigen::VectorXd disp(3 * m.node_count());
        for (int i = 0; i < m.node_count(); ++i)
            disp.segment<3>(3 * i) = 0.1 * m.nodes[i];
        CHECK(mesh::total_volume(m, disp) ==
              doctest::Approx(rest * 1.331).epsilon(1e-12));
    }
    SUBCASE("length mismatch throws") {
        CHECK_THROWS_AS(mesh::total_volume(m, Eigen::VectorXd::Zero(5)), ValidationError);
    }
}

TEST_CASE("total volume equals the per-tet closed-form sum") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> jitter(-0.08, 0.08);
    auto m = mesh::make_bar_mesh(3, 3, 3, 0.3, 0.3, 0.3);
    for (auto& p : m.nodes)
        p += Eigen::Vector3d(jitter(rng), jitter(rng), jitter(rng));

    double per_tet_sum = 0.0;
    for (const auto& tet : m.tets) {
        const Eigen::Vector3d a = m.nodes[tet[0]], b = m.nodes[tet[1]], c = m.nodes[tet[2]],
                              d = m.nodes[tet[3]];
        per_tet_sum += (b - a).cross(c - a).dot(d - a) / 6.0;
    }
    CHECK(mesh::total_volume(m) == doctest::Approx(per_tet_sum).epsilon(1e-12));
}

TEST_CASE("save/load round trip is bit-identical") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> jitter(-0.015, 0.015);
    auto m = mesh::make_bar_mesh(2, 3, 2, 0.13, 0.07, 0.19);
    for (auto& p : m.nodes)
        p += Eigen::Vector3d(jitter(rng), jitter(rng), jitter(rng));
    mesh::validate_tet_mesh(m, true); // canonical orientation before writing

    const auto dir = temp_dir();
    mesh::save_tet_mesh(m, (dir / "rt.node").string(), (dir / "rt.ele").string());
    const auto loaded =
        mesh::load_tet_mesh((dir / "rt.node").string(), (dir / "rt.ele").string());

    REQUIRE(loaded.node_count() == m.node_count());
    REQUIRE(loaded.tet_count() == m.tet_count());
    for (int i = 0; i < m.node_count(); ++i)
        for (int c = 0; c < 3; ++c)
            CHECK(loaded.nodes[i][c] == m.nodes[i][c]); // exact
    for (int t = 0; t < m.tet_count(); ++t)
        CHECK(loaded.tets[t] == m.tets[t]);
}

TEST_CASE("plane node selection against the brute-force oracle") {
    const auto m = mesh::make_bar_mesh(4, 2, 2, 0.25, 0.5, 0.5);
    const auto surface = brute_force_surface_nodes(m);

    SUBCASE("mid-width plane picks the middle column of surface nodes") {
        // midsagittal normal is x; nodes at x = 0.5 +- half a cell
        const auto sel = mesh::select_plane_nodes(m, mesh::Plane::midsagittal, 0.5, 0.124,
                                                  mesh::NodeRole::constraint);
        std::set<int> expected;
        for (int id : surface)
            if (std::abs(m.nodes[id].x() - 0.5) <= 0.124)
                expected.insert(id);
        CHECK(std::set<int>(sel.ids.begin(), sel.ids.end()) == expected);
        CHECK_FALSE(sel.ids.empty());
    }
    SUBCASE("selection is ordered by the in-plane axes") {
        const auto sel = mesh::select_plane_nodes(m, mesh::Plane::midsagittal, 0.5, 0.124,
                                                  mesh::NodeRole::constraint);
        for (std::size_t i = 1; i < sel.ids.size(); ++i) {
            const auto& a = m.nodes[sel.ids[i - 1]];
            const auto& b = m.nodes[sel.ids[i]];
            CHECK((a.y() < b.y() || (a.y() == b.y() && a.z() <= b.z())));
        }
    }
    SUBCASE("zero tolerance on an empty plane throws") {
        CHECK_THROWS_AS(mesh::select_plane_nodes(m, mesh::Plane::midsagittal, 0.51, 0.0,
                                                 mesh::NodeRole::anchor),
                        ValidationError);
    }
    SUBCASE("tolerance spanning the bar selects every surface node") {
        const auto sel = mesh::select_plane_nodes(m, mesh::Plane::midsagittal, 0.5, 10.0,
                                                  mesh::NodeRole::anchor);
        CHECK(std::set<int>(sel.ids.begin(), sel.ids.end()) == surface);
    }
}

TEST_CASE("anchor/constraint overlap is rejected") {
    mesh::NodeSelection anchors{mesh::NodeRole::anchor, {1, 2, 3}};
    mesh::NodeSelection constraints{mesh::NodeRole::constraint, {4, 3}};
    CHECK_THROWS_AS(mesh::ensure_disjoint(anchors, constraints), ValidationError);
    constraints.ids = {4, 5};
    CHECK_NOTHROW(mesh::ensure_disjoint(anchors, constraints));
}
