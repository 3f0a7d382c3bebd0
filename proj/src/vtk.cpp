#include "rotopt/vtk.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace rotopt {

void write_vtk(const std::string& path, const Mesh& mesh, const VtkFields& fields) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("vtk: cannot open " + path + " for writing");
    out << "# vtk DataFile Version 3.0\n";
    out << "rotopt mesh\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << std::setprecision(17);
    out << "POINTS " << mesh.num_nodes() << " double\n";
    for (int i = 0; i < mesh.num_nodes(); ++i)
        out << mesh.nodes(i, 0) << ' ' << mesh.nodes(i, 1) << " 0\n";
    out << "CELLS " << mesh.num_tris() << ' ' << 4 * mesh.num_tris() << '\n';
    for (int e = 0; e < mesh.num_tris(); ++e)
        out << "3 " << mesh.tris(e, 0) << ' ' << mesh.tris(e, 1) << ' ' << mesh.tris(e, 2) << '\n';
    out << "CELL_TYPES " << mesh.num_tris() << '\n';
    for (int e = 0; e < mesh.num_tris(); ++e) out << "5\n";

    out << "CELL_DATA " << mesh.num_tris() << '\n';
    out << "SCALARS region int 1\nLOOKUP_TABLE default\n";
    for (int e = 0; e < mesh.num_tris(); ++e) out << mesh.region[e] << '\n';
    for (const auto& [name, data] : fields.cell_scalars) {
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (int e = 0; e < data.size(); ++e) out << data[e] << '\n';
    }
    if (!fields.point_scalars.empty() || !fields.point_vectors.empty()) {
        out << "POINT_DATA " << mesh.num_nodes() << '\n';
        for (const auto& [name, data] : fields.point_scalars) {
            out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
            for (int i = 0; i < data.size(); ++i) out << data[i] << '\n';
        }
        for (const auto& [name, data] : fields.point_vectors) {
            out << "VECTORS " << name << " double\n";
            for (int i = 0; i < data.rows(); ++i)
                out << data(i, 0) << ' ' << data(i, 1) << ' ' << data(i, 2) << '\n';
        }
    }
}

VtkGrid read_vtk(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("vtk: cannot open " + path);
    VtkGrid grid;
    std::string line;
    int n_cells = 0;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "POINTS") {
            int n = 0;
            ls >> n;
            grid.nodes.resize(n, 2);
            for (int i = 0; i < n; ++i) {
                double x, y, z;
                in >> x >> y >> z;
                grid.nodes.row(i) << x, y;
            }
        } else if (key == "CELLS") {
            ls >> n_cells;
            grid.tris.resize(n_cells, 3);
            for (int e = 0; e < n_cells; ++e) {
                int cnt, a, b, c;
                in >> cnt >> a >> b >> c;
                if (cnt != 3) throw std::runtime_error("vtk: only triangle cells supported");
                grid.tris.row(e) << a, b, c;
            }
        } else if (key == "SCALARS") {
            std::string name, type;
            ls >> name >> type;
            std::getline(in, line);  // LOOKUP_TABLE
            if (line.find("LOOKUP_TABLE") == std::string::npos) std::getline(in, line);
            Vec v(n_cells);
            for (int e = 0; e < n_cells; ++e) in >> v[e];
            grid.cell_scalars[name] = v;
        } else if (key == "POINT_DATA") {
            break;  // cell part complete
        }
    }
    if (grid.nodes.rows() == 0 || grid.tris.rows() == 0)
        throw std::runtime_error("vtk: file " + path + " has no triangle grid");
    return grid;
}

}  // namespace rotopt
