#include "rotopt/levelset.hpp"

#include <cmath>

namespace rotopt {

SimplexGeometry SimplexGeometry::regular(int m_materials) {
    if (m_materials < 2) throw std::invalid_argument("simplex: need at least 2 materials");
    const int m = m_materials;
    SimplexGeometry s;
    s.m = m;
    // Helmert basis of the zero-sum hyperplane in R^m gives vertices with
    // unit pairwise distances after scaling by 1/sqrt(2)
    MatX helmert(m - 1, m);
    helmert.setZero();
    for (int k = 1; k < m; ++k) {
        const double norm = std::sqrt(static_cast<double>(k) * (k + 1));
        for (int i = 0; i < k; ++i) helmert(k - 1, i) = 1.0 / norm;
        helmert(k - 1, k) = -static_cast<double>(k) / norm;
    }
    s.vertices.resize(m, m - 1);
    for (int i = 0; i < m; ++i)
        s.vertices.row(i) = (helmert.col(i) / std::sqrt(2.0)).transpose();

    s.n_matrix.resize(m);
    s.n_inverse.resize(m);
    for (int i = 0; i < m; ++i) {
        MatX n(m - 1, m - 1);
        int row = 0;
        for (int j = 0; j < m; ++j) {
            if (j == i) continue;
            n.row(row++) = s.vertices.row(i) - s.vertices.row(j);
        }
        s.n_matrix[i] = n;
        s.n_inverse[i] = n.inverse();
    }
    return s;
}

MaterialId material_at(const Vec& psi_value, const SimplexGeometry& simplex) {
    int best = 0;
    double best_d = (simplex.vertices.row(0).transpose() - psi_value).squaredNorm();
    for (int i = 1; i < simplex.m; ++i) {
        const double d = (simplex.vertices.row(i).transpose() - psi_value).squaredNorm();
        if (d < best_d - 1e-15 * (1.0 + best_d)) {
            best = i;
            best_d = d;
        }
    }
    return static_cast<MaterialId>(best);
}

Eigen::VectorXi induced_labels(const Mesh& mesh, const LevelSetField& field,
                               const SimplexGeometry& simplex) {
    Eigen::VectorXi labels(static_cast<int>(mesh.design_elems.size()));
    for (size_t d = 0; d < mesh.design_elems.size(); ++d) {
        const int e = mesh.design_elems[d];
        Vec psi = Vec::Zero(simplex.m - 1);
        for (int v = 0; v < 3; ++v) {
            const int dn = mesh.design_node_index[mesh.tris(e, v)];
            psi += field.psi.row(dn).transpose();
        }
        psi /= 3.0;
        labels[static_cast<int>(d)] = static_cast<int>(material_at(psi, simplex));
    }
    return labels;
}

LevelSetField levelset_from_labels(const Mesh& mesh, const ElementCache& cache,
                                   const Eigen::VectorXi& labels,
                                   const SimplexGeometry& simplex) {
    LevelSetField field;
    field.psi = MatX::Zero(static_cast<int>(mesh.design_nodes.size()), simplex.m - 1);
    Vec weight = Vec::Zero(static_cast<int>(mesh.design_nodes.size()));
    for (size_t d = 0; d < mesh.design_elems.size(); ++d) {
        const int e = mesh.design_elems[d];
        const int label = labels[static_cast<int>(d)];
        const double area = cache.area[e];
        for (int v = 0; v < 3; ++v) {
            const int dn = mesh.design_node_index[mesh.tris(e, v)];
            field.psi.row(dn) += area * simplex.vertices.row(label);
            weight[dn] += area;
        }
    }
    for (int i = 0; i < field.psi.rows(); ++i)
        if (weight[i] > 0.0) field.psi.row(i) /= weight[i];
    return renormalize_levelset(field);
}

LevelSetField levelset_update(const LevelSetField& field, const MatX& mapped_td, double s) {
    if (mapped_td.rows() != field.psi.rows() || mapped_td.cols() != field.psi.cols())
        throw std::invalid_argument("levelset_update: shape mismatch");
    double max_norm = 0.0;
    for (int i = 0; i < mapped_td.rows(); ++i)
        max_norm = std::max(max_norm, mapped_td.row(i).norm());
    LevelSetField out;
    if (max_norm == 0.0) {
        out.psi = (1.0 - s) * field.psi;
        return out;
    }
    out.psi = (1.0 - s) * field.psi + (s / max_norm) * mapped_td;
    return out;
}

LevelSetField renormalize_levelset(const LevelSetField& field) {
    LevelSetField out;
    out.psi = field.psi;
    for (int i = 0; i < out.psi.rows(); ++i) {
        const double n = out.psi.row(i).norm();
        if (n > 0.0) out.psi.row(i) /= n;
    }
    return out;
}

}  // namespace rotopt
