#include "biharm/forms.hpp"

#include <cmath>
#include <fstream>
#include <vector>

namespace biharm {

void SchemeParams::validate() const {
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0) || !(sigma_ip > 0.0))
    throw Error("config_error", "penalty parameters must be positive");
  if (theta < -1.0 || theta > 1.0)
    throw Error("config_error", "theta must lie in [-1,1]");
}

double SparseMatrix::asymmetry() const {
  Eigen::SparseMatrix<double> diff = mat - Eigen::SparseMatrix<double>(mat.transpose());
  double m = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it)
      m = std::max(m, std::abs(it.value()));
  return m;
}

void SparseMatrix::save_coordinate_format(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw Error("io_error", "cannot write " + file.string());
  out.precision(17);
  out << mat.rows() << ' ' << mat.cols() << ' ' << mat.nonZeros() << '\n';
  for (int k = 0; k < mat.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(mat, k); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

void scatter_local(const FeSpace& space, int tri,
                   const Eigen::Matrix<double, 6, 6>& local, Triplets& out) {
  for (int i = 0; i < 6; ++i) {
    const int gi = space.global_dof(tri, i);
    if (gi < 0) continue;
    for (int j = 0; j < 6; ++j) {
      const int gj = space.global_dof(tri, j);
      if (gj >= 0 && local(i, j) != 0.0) out.emplace_back(gi, gj, local(i, j));
    }
  }
}

SparseMatrix from_triplets(int dim, const Triplets& triplets, bool symmetric) {
  SparseMatrix out;
  out.mat.resize(dim, dim);
  out.mat.setFromTriplets(triplets.begin(), triplets.end());
  out.mat.makeCompressed();
  out.symmetric = symmetric;
  return out;
}

// local dofs of the one or two triangles adjacent to an edge, with the
// side sign (+1 for K+, -1 for K-)
struct EdgeStencil {
  struct Entry {
    int tri;
    int local;
    int global;  // -1 if constrained
    double side; // +1 or -1
  };
  std::vector<Entry> entries;
};

EdgeStencil edge_stencil(const FeSpace& space, int e) {
  const Edge& edge = space.mesh().edge(e);
  EdgeStencil st;
  for (int l = 0; l < 6; ++l)
    st.entries.push_back({edge.tri_plus, l, space.global_dof(edge.tri_plus, l), 1.0});
  if (!edge.on_boundary())
    for (int l = 0; l < 6; ++l)
      st.entries.push_back(
          {edge.tri_minus, l, space.global_dof(edge.tri_minus, l), -1.0});
  return st;
}

}  // namespace

SparseMatrix assemble_apw(const FeSpace& space) {
  const Triangulation& mesh = space.mesh();
  const QuadratureRule rule = triangle_rule(2);
  Triplets triplets;
  std::array<Evaluation, 6> basis;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    Eigen::Matrix<double, 6, 6> local = Eigen::Matrix<double, 6, 6>::Zero();
    for_each_point(mesh, t, rule, [&](const Eigen::Vector2d& x, double w) {
      space.eval_basis(t, x, basis);
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
          local(i, j) += w * basis[i].hessian.cwiseProduct(basis[j].hessian).sum();
    });
    scatter_local(space, t, local, triplets);
  }
  return from_triplets(space.dim(), triplets, true);
}

SparseMatrix assemble_consistency(const FeSpace& space, double theta) {
  const Triangulation& mesh = space.mesh();
  SparseMatrix out;
  out.mat.resize(space.dim(), space.dim());
  out.symmetric = (theta == 1.0);
  if (space.scheme() == Scheme::Morley || space.scheme() == Scheme::WOPSIP)
    return out;  // b_h = 0

  const QuadratureRule rule = edge_rule(3);
  Triplets triplets;
  std::array<Evaluation, 6> basis;
  for (int e = 0; e < mesh.edge_count(); ++e) {
    const Edge& edge = mesh.edge(e);
    const EdgeStencil st = edge_stencil(space, e);
    const int n = static_cast<int>(st.entries.size());
    const double avg = edge.on_boundary() ? 1.0 : 0.5;
    // J(i,j) = int_E <D^2 phi_j nu> . [grad phi_i] ds
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int q = 0; q < rule.size(); ++q) {
      const double s = rule.points(q, 0);
      const double w = rule.weights[q] * edge.length;
      const Eigen::Vector2d x = (1.0 - s) * mesh.vertex(edge.vertices[0]) +
                                s * mesh.vertex(edge.vertices[1]);
      Eigen::MatrixXd grad_jump(n, 2);
      Eigen::MatrixXd hess_nu(n, 2);
      int row = 0;
      int last_tri = -1;
      for (const auto& entry : st.entries) {
        if (entry.tri != last_tri) {
          space.eval_basis(entry.tri, x, basis);
          last_tri = entry.tri;
        }
        grad_jump.row(row) = entry.side * basis[entry.local].gradient.transpose();
        hess_nu.row(row) = (avg * (basis[entry.local].hessian * edge.normal)).transpose();
        ++row;
      }
      J += w * grad_jump * hess_nu.transpose();
    }
    for (int i = 0; i < n; ++i) {
      const int gi = st.entries[i].global;
      if (gi < 0) continue;
      for (int j = 0; j < n; ++j) {
        const int gj = st.entries[j].global;
        if (gj < 0) continue;
        const double v = -theta * J(i, j) - J(j, i);
        if (v != 0.0) triplets.emplace_back(gi, gj, v);
      }
    }
  }
  out.mat.setFromTriplets(triplets.begin(), triplets.end());
  out.mat.makeCompressed();
  return out;
}

SparseMatrix assemble_penalty(const FeSpace& space, const SchemeParams& params) {
  params.validate();
  const Triangulation& mesh = space.mesh();
  SparseMatrix out;
  out.mat.resize(space.dim(), space.dim());
  out.symmetric = true;
  if (space.scheme() == Scheme::Morley) return out;

  const QuadratureRule rule = edge_rule(5);
  Triplets triplets;
  std::array<Evaluation, 6> basis;
  for (int e = 0; e < mesh.edge_count(); ++e) {
    const Edge& edge = mesh.edge(e);
    const EdgeStencil st = edge_stencil(space, e);
    const int n = static_cast<int>(st.entries.size());
    const double h = edge.length;
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(n, n);

    auto value_and_normal_jumps = [&](const Eigen::Vector2d& x,
                                      Eigen::VectorXd& vj, Eigen::VectorXd& nj) {
      vj.resize(n);
      nj.resize(n);
      int row = 0;
      int last_tri = -1;
      for (const auto& entry : st.entries) {
        if (entry.tri != last_tri) {
          space.eval_basis(entry.tri, x, basis);
          last_tri = entry.tri;
        }
        vj[row] = entry.side * basis[entry.local].value;
        nj[row] = entry.side * edge.normal.dot(basis[entry.local].gradient);
        ++row;
      }
    };

    Eigen::VectorXd vj, nj;
    switch (space.scheme()) {
      case Scheme::DG: {
        for (int q = 0; q < rule.size(); ++q) {
          const double s = rule.points(q, 0);
          const double w = rule.weights[q] * h;
          const Eigen::Vector2d x = (1.0 - s) * mesh.vertex(edge.vertices[0]) +
                                    s * mesh.vertex(edge.vertices[1]);
          value_and_normal_jumps(x, vj, nj);
          local += w * (params.sigma1 / (h * h * h)) * vj * vj.transpose();
          local += w * (params.sigma2 / h) * nj * nj.transpose();
        }
        break;
      }
      case Scheme::C0IP: {
        for (int q = 0; q < rule.size(); ++q) {
          const double s = rule.points(q, 0);
          const double w = rule.weights[q] * h;
          const Eigen::Vector2d x = (1.0 - s) * mesh.vertex(edge.vertices[0]) +
                                    s * mesh.vertex(edge.vertices[1]);
          value_and_normal_jumps(x, vj, nj);
          local += w * (params.sigma_ip / h) * nj * nj.transpose();
        }
        break;
      }
      case Scheme::WOPSIP: {
        // vertex jumps at both endpoints of the edge
        for (double s : {0.0, 1.0}) {
          const Eigen::Vector2d x = (1.0 - s) * mesh.vertex(edge.vertices[0]) +
                                    s * mesh.vertex(edge.vertices[1]);
          value_and_normal_jumps(x, vj, nj);
          local += std::pow(h, -4.0) * vj * vj.transpose();
        }
        // the mean normal-derivative jump is the midpoint value for P2
        value_and_normal_jumps(edge.midpoint, vj, nj);
        local += std::pow(h, -2.0) * nj * nj.transpose();
        break;
      }
      default:
        break;
    }
    for (int i = 0; i < n; ++i) {
      const int gi = st.entries[i].global;
      if (gi < 0) continue;
      for (int j = 0; j < n; ++j) {
        const int gj = st.entries[j].global;
        if (gj >= 0 && local(i, j) != 0.0) triplets.emplace_back(gi, gj, local(i, j));
      }
    }
  }
  out.mat.setFromTriplets(triplets.begin(), triplets.end());
  out.mat.makeCompressed();
  return out;
}

SparseMatrix scheme_form(const FeSpace& space, const SchemeParams& params) {
  params.validate();
  SparseMatrix apw = assemble_apw(space);
  switch (space.scheme()) {
    case Scheme::Morley:
      return apw;
    case Scheme::DG:
    case Scheme::C0IP: {
      SparseMatrix b = assemble_consistency(space, params.theta);
      SparseMatrix c = assemble_penalty(space, params);
      SparseMatrix out;
      out.mat = apw.mat + b.mat + c.mat;
      out.mat.makeCompressed();
      out.symmetric = (params.theta == 1.0);
      return out;
    }
    case Scheme::WOPSIP: {
      SparseMatrix c = assemble_penalty(space, params);
      SparseMatrix out;
      out.mat = apw.mat + c.mat;
      out.mat.makeCompressed();
      out.symmetric = true;
      return out;
    }
  }
  throw Error("forms_error", "unknown scheme");
}

namespace {

int volume_rule_degree(const Evaluable& v) {
  if (v.polynomial_degree() < 0) return 10;   // smooth input
  if (v.on_subtriangles()) return 14;         // companion output
  return 4;
}

double energy_pw_sq(const Evaluable& v, const Triangulation& mesh) {
  const QuadratureRule rule = triangle_rule(volume_rule_degree(v));
  double sq = 0.0;
  auto add = [&](int t, const Eigen::Vector2d& x, double w) {
    sq += w * v.evaluate(t, x).hessian.squaredNorm();
  };
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    if (!v.on_subtriangles()) {
      for_each_point(mesh, t, rule, [&](const Eigen::Vector2d& x, double w) {
        add(t, x, w);
      });
    } else {
      const auto& tri = mesh.triangle(t);
      const Eigen::Vector2d c = mesh.centroid(t);
      for (int s = 0; s < 3; ++s)
        for_each_point(mesh.vertex(tri[s]), mesh.vertex(tri[(s + 1) % 3]), c, rule,
                       [&](const Eigen::Vector2d& x, double w) { add(t, x, w); });
    }
  }
  return sq;
}

// generic edge penalty accumulator: fn(edge, value_jump, normal_jump, w)
template <typename Fn>
void for_each_edge_jump(const Evaluable& v, const Triangulation& mesh,
                        const QuadratureRule& rule, Fn&& fn) {
  for (int e = 0; e < mesh.edge_count(); ++e) {
    const Edge& edge = mesh.edge(e);
    for (int q = 0; q < rule.size(); ++q) {
      const double s = rule.points(q, 0);
      const TraceJump tj = trace_jump(v, mesh, e, s);
      fn(e, tj, rule.weights[q] * edge.length);
    }
  }
}

}  // namespace

double jump_seminorm(const Evaluable& v, const Triangulation& mesh) {
  double sq = 0.0;
  const QuadratureRule rule = edge_rule(9);
  for (int e = 0; e < mesh.edge_count(); ++e) {
    const Edge& edge = mesh.edge(e);
    // vertex jumps at the two endpoints
    for (double s : {0.0, 1.0}) {
      const TraceJump tj = trace_jump(v, mesh, e, s);
      sq += tj.value_jump * tj.value_jump / (edge.length * edge.length);
    }
    // squared mean of the normal-derivative jump
    double mean = 0.0;
    for (int q = 0; q < rule.size(); ++q)
      mean += rule.weights[q] *
              trace_jump(v, mesh, e, rule.points(q, 0)).normal_derivative_jump;
    sq += mean * mean;
  }
  return std::sqrt(sq);
}

double penalty_value_dg(const Evaluable& v, const Triangulation& mesh,
                        const SchemeParams& params) {
  double sq = 0.0;
  for_each_edge_jump(v, mesh, edge_rule(9), [&](int e, const TraceJump& tj, double w) {
    const double h = mesh.edge(e).length;
    sq += w * (params.sigma1 / (h * h * h)) * tj.value_jump * tj.value_jump;
    sq += w * (params.sigma2 / h) * tj.normal_derivative_jump *
          tj.normal_derivative_jump;
  });
  return sq;
}

double penalty_value_ip(const Evaluable& v, const Triangulation& mesh,
                        const SchemeParams& params) {
  double sq = 0.0;
  for_each_edge_jump(v, mesh, edge_rule(9), [&](int e, const TraceJump& tj, double w) {
    const double h = mesh.edge(e).length;
    sq += w * (params.sigma_ip / h) * tj.normal_derivative_jump *
          tj.normal_derivative_jump;
  });
  return sq;
}

double penalty_value_p(const Evaluable& v, const Triangulation& mesh) {
  double sq = 0.0;
  const QuadratureRule rule = edge_rule(9);
  for (int e = 0; e < mesh.edge_count(); ++e) {
    const Edge& edge = mesh.edge(e);
    const double h = edge.length;
    for (double s : {0.0, 1.0}) {
      const TraceJump tj = trace_jump(v, mesh, e, s);
      sq += std::pow(h, -4.0) * tj.value_jump * tj.value_jump;
    }
    double mean = 0.0;
    for (int q = 0; q < rule.size(); ++q)
      mean += rule.weights[q] *
              trace_jump(v, mesh, e, rule.points(q, 0)).normal_derivative_jump;
    sq += std::pow(h, -2.0) * mean * mean;
  }
  return sq;
}

NormTag norm_from_string(const std::string& name) {
  if (name == "energy_pw" || name == "pw") return NormTag::EnergyPw;
  if (name == "h") return NormTag::H;
  if (name == "dg") return NormTag::DG;
  if (name == "ip") return NormTag::IP;
  if (name == "p") return NormTag::P;
  throw Error("config_error", "unknown norm tag '" + name + "'");
}

NormTag scheme_norm(Scheme scheme) {
  switch (scheme) {
    case Scheme::Morley: return NormTag::EnergyPw;
    case Scheme::DG: return NormTag::DG;
    case Scheme::C0IP: return NormTag::IP;
    case Scheme::WOPSIP: return NormTag::P;
  }
  return NormTag::EnergyPw;
}

double norms(const Evaluable& v, const Triangulation& mesh, NormTag which,
             const SchemeParams& params) {
  switch (which) {
    case NormTag::EnergyPw:
      return std::sqrt(energy_pw_sq(v, mesh));
    case NormTag::H: {
      const double j = jump_seminorm(v, mesh);
      return std::sqrt(energy_pw_sq(v, mesh) + j * j);
    }
    case NormTag::DG:
      return std::sqrt(energy_pw_sq(v, mesh) + penalty_value_dg(v, mesh, params));
    case NormTag::IP:
      return std::sqrt(energy_pw_sq(v, mesh) + penalty_value_ip(v, mesh, params));
    case NormTag::P:
      return std::sqrt(energy_pw_sq(v, mesh) + penalty_value_p(v, mesh));
  }
  throw Error("forms_error", "unknown norm tag");
}

SparseMatrix norm_gram_matrix(const FeSpace& space, const SchemeParams& params) {
  SparseMatrix apw = assemble_apw(space);
  if (space.scheme() == Scheme::Morley) return apw;
  SparseMatrix c = assemble_penalty(space, params);
  SparseMatrix out;
  out.mat = apw.mat + c.mat;
  out.mat.makeCompressed();
  out.symmetric = true;
  return out;
}

}  // namespace biharm
