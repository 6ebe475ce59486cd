#include "biharm/transfer.hpp"

#include <cmath>
#include <map>

namespace biharm {

std::string to_string(Smoother s) {
  switch (s) {
    case Smoother::Id: return "id";
    case Smoother::IM: return "im";
    case Smoother::JIM: return "jim";
  }
  return "?";
}

Smoother smoother_from_string(const std::string& name) {
  if (name == "id") return Smoother::Id;
  if (name == "im" || name == "i_m") return Smoother::IM;
  if (name == "jim" || name == "ji_m") return Smoother::JIM;
  throw Error("config_error", "unknown smoother '" + name + "'");
}

namespace {

// cubic monomial basis {1,x,y,x2,xy,y2,x3,x2y,xy2,y3}
using Mono10 = Eigen::Matrix<double, 10, 1>;

Mono10 mono10_values(const Eigen::Vector2d& p) {
  const double x = p.x(), y = p.y();
  Mono10 m;
  m << 1, x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y;
  return m;
}

Eigen::Matrix<double, 10, 2> mono10_gradients(const Eigen::Vector2d& p) {
  const double x = p.x(), y = p.y();
  Eigen::Matrix<double, 10, 2> g;
  g << 0, 0,
       1, 0,
       0, 1,
       2 * x, 0,
       y, x,
       0, 2 * y,
       3 * x * x, 0,
       2 * x * y, x * x,
       y * y, 2 * x * y,
       0, 3 * y * y;
  return g;
}

// rows: (xx, xy, yy)
Eigen::Matrix<double, 10, 3> mono10_hessians(const Eigen::Vector2d& p) {
  const double x = p.x(), y = p.y();
  Eigen::Matrix<double, 10, 3> h;
  h << 0, 0, 0,
       0, 0, 0,
       0, 0, 0,
       2, 0, 0,
       0, 1, 0,
       0, 0, 2,
       6 * x, 0, 0,
       2 * y, 2 * x, 0,
       0, 2 * y, 2 * x,
       0, 0, 6 * y;
  return h;
}

// quadratic monomials {1,x,y,x2,xy,y2} reused from the scaled frame
Eigen::Matrix<double, 6, 1> mono6_values(const Eigen::Vector2d& p) {
  Eigen::Matrix<double, 6, 1> m;
  m << 1, p.x(), p.y(), p.x() * p.x(), p.x() * p.y(), p.y() * p.y();
  return m;
}

Eigen::Matrix<double, 6, 2> mono6_gradients(const Eigen::Vector2d& p) {
  Eigen::Matrix<double, 6, 2> g;
  g << 0, 0, 1, 0, 0, 1, 2 * p.x(), 0, p.y(), p.x(), 0, 2 * p.y();
  return g;
}

Eigen::Matrix<double, 6, 3> mono6_hessians() {
  Eigen::Matrix<double, 6, 3> h;
  h << 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 2;
  return h;
}

// scaled local frame around the triangle centroid
struct ScaledProbe {
  Eigen::Vector2d center;
  double h;
  Eigen::Vector2d local(const Eigen::Vector2d& x) const { return (x - center) / h; }
};

std::array<Eigen::Vector2d, 3> barycentric_gradients(const Triangulation& mesh,
                                                     int t) {
  const auto& tri = mesh.triangle(t);
  const Eigen::Vector2d a = mesh.vertex(tri[0]);
  const Eigen::Vector2d b = mesh.vertex(tri[1]);
  const Eigen::Vector2d c = mesh.vertex(tri[2]);
  const double inv2A = 1.0 / (2.0 * mesh.area(t));
  return {Eigen::Vector2d(b.y() - c.y(), c.x() - b.x()) * inv2A,
          Eigen::Vector2d(c.y() - a.y(), a.x() - c.x()) * inv2A,
          Eigen::Vector2d(a.y() - b.y(), b.x() - a.x()) * inv2A};
}

// value/gradient/Hessian of the squared cubic bubble b^2 = (l0 l1 l2)^2
struct BubbleKernel {
  double value;
  Eigen::Vector2d gradient;
  Eigen::Matrix2d hessian;
};

BubbleKernel bubble_squared(const Triangulation& mesh, int t,
                            const Eigen::Vector2d& x) {
  const Eigen::Vector3d l = mesh.barycentric(t, x);
  const auto g = barycentric_gradients(mesh, t);
  const double b = l[0] * l[1] * l[2];
  const Eigen::Vector2d grad_b = l[1] * l[2] * g[0] + l[0] * l[2] * g[1] +
                                 l[0] * l[1] * g[2];
  Eigen::Matrix2d hess_b = Eigen::Matrix2d::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      const int k = 3 - i - j;
      hess_b += l[k] * (g[i] * g[j].transpose() + g[j] * g[i].transpose());
    }
  BubbleKernel out;
  out.value = b * b;
  out.gradient = 2.0 * b * grad_b;
  out.hessian = 2.0 * (grad_b * grad_b.transpose() + b * hess_b);
  return out;
}

}  // namespace

CompanionOperator::CompanionOperator(std::shared_ptr<const FeSpace> morley_space)
    : morley_(std::move(morley_space)) {
  if (morley_->scheme() != Scheme::Morley)
    throw Error("transfer_error", "companion operator requires a Morley space");
  const Triangulation& mesh = morley_->mesh();
  const int nt = mesh.triangle_count();
  tri_data_.resize(nt);
  bubble_from_morley_.resize(nt);
  bubble_from_hct_.resize(nt);
  for (int t = 0; t < nt; ++t) build_triangle(t);
  build_dof_matrix();
}

std::shared_ptr<const CompanionOperator> CompanionOperator::make(
    std::shared_ptr<const FeSpace> morley_space) {
  return std::shared_ptr<const CompanionOperator>(
      new CompanionOperator(std::move(morley_space)));
}

Eigen::Matrix<double, 12, 1> CompanionOperator::dof_scaling(double h) {
  Eigen::Matrix<double, 12, 1> s;
  s << 1, 1, 1, h, h, h, h, h, h, h, h, h;
  return s;
}

void CompanionOperator::build_triangle(int t) {
  const Triangulation& mesh = morley_->mesh();
  TriangleData& data = tri_data_[t];
  data.center = mesh.centroid(t);
  data.h = mesh.h(t);
  const auto& tri = mesh.triangle(t);
  for (int i = 0; i < 3; ++i)
    data.scaled_vertices[i] = (mesh.vertex(tri[i]) - data.center) / data.h;

  // Clough-Tocher split in the scaled frame: subtriangle s spans
  // (z_s, z_{s+1}, 0). The 33x30 system couples the three cubics through
  // C1 matching across the internal edges (0,z_s) and pins the 12 dofs.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(33, 30);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(33, 12);
  int row = 0;
  for (int s = 0; s < 3; ++s) {
    const int left = s;
    const int right = (s + 2) % 3;
    const Eigen::Vector2d z = data.scaled_vertices[s];
    const Eigen::Vector2d n(-z.y(), z.x());  // any normal to the internal edge
    for (double tpar : {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}) {
      const Mono10 m = mono10_values(tpar * z);
      A.block<1, 10>(row, 10 * left) = m.transpose();
      A.block<1, 10>(row, 10 * right) -= m.transpose();
      ++row;
    }
    for (double tpar : {0.0, 0.5, 1.0}) {
      const Eigen::Matrix<double, 10, 2> g = mono10_gradients(tpar * z);
      A.block<1, 10>(row, 10 * left) = (g * n).transpose();
      A.block<1, 10>(row, 10 * right) -= (g * n).transpose();
      ++row;
    }
  }
  // dof rows: values and gradients at vertex i on subtriangle i
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector2d z = data.scaled_vertices[i];
    A.block<1, 10>(row, 10 * i) = mono10_values(z).transpose();
    rhs(row, i) = 1.0;
    ++row;
    const Eigen::Matrix<double, 10, 2> g = mono10_gradients(z);
    A.block<1, 10>(row, 10 * i) = g.col(0).transpose();
    rhs(row, 3 + 2 * i) = 1.0;
    ++row;
    A.block<1, 10>(row, 10 * i) = g.col(1).transpose();
    rhs(row, 4 + 2 * i) = 1.0;
    ++row;
  }
  // mean normal derivative over outer edge j (opposite vertex j) lives on
  // subtriangle j+1; two-point Gauss is exact for the quadratic integrand
  for (int j = 0; j < 3; ++j) {
    const int sub = (j + 1) % 3;
    const Eigen::Vector2d a = data.scaled_vertices[(j + 1) % 3];
    const Eigen::Vector2d b = data.scaled_vertices[(j + 2) % 3];
    const Eigen::Vector2d nu = mesh.edge(mesh.triangle_edge(t, j)).normal;
    const double g1 = 0.5 * (1.0 - 1.0 / std::sqrt(3.0));
    const double g2 = 0.5 * (1.0 + 1.0 / std::sqrt(3.0));
    for (double tpar : {g1, g2}) {
      const Eigen::Matrix<double, 10, 2> g =
          mono10_gradients(a + tpar * (b - a));
      A.block<1, 10>(row, 10 * sub) += 0.5 * (g * nu).transpose();
    }
    rhs(row, 9 + j) = 1.0;
    ++row;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < 30)
    throw Error("transfer_error",
                "HCT system rank-deficient on triangle " + std::to_string(t));
  const Eigen::MatrixXd sol = qr.solve(rhs);
  const double residual = (A * sol - rhs).norm();
  if (residual > 1e-8 * std::max(1.0, rhs.norm()))
    throw Error("transfer_error", "HCT system inconsistent on triangle " +
                                      std::to_string(t) + " (residual " +
                                      std::to_string(residual) + ")");
  data.hct = sol;

  // bubble correction: solve G q = R c_M - S d for every input, stored as
  // the two response matrices
  const ScaledProbe frame{data.center, data.h};
  Eigen::Matrix<double, 6, 6> G = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 6> R = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 12> S = Eigen::Matrix<double, 6, 12>::Zero();
  {
    const QuadratureRule rule = triangle_rule(12);
    std::array<Evaluation, 6> basis;
    for_each_point(mesh, t, rule, [&](const Eigen::Vector2d& x, double w) {
      const Eigen::Matrix<double, 6, 1> p = mono6_values(frame.local(x));
      const double b2 = bubble_squared(mesh, t, x).value;
      G += (w * b2) * p * p.transpose();
      morley_->eval_basis(t, x, basis);
      for (int a = 0; a < 6; ++a) R.col(a) += (w * basis[a].value) * p;
    });
  }
  {
    // HCT basis integrals subtriangle by subtriangle
    const QuadratureRule rule = triangle_rule(6);
    const auto& tv = mesh.triangle(t);
    for (int s = 0; s < 3; ++s) {
      const Eigen::Vector2d p0 = mesh.vertex(tv[s]);
      const Eigen::Vector2d p1 = mesh.vertex(tv[(s + 1) % 3]);
      for_each_point(p0, p1, mesh.centroid(t), rule,
                     [&](const Eigen::Vector2d& x, double w) {
                       const Mono10 m = mono10_values(frame.local(x));
                       const Eigen::Matrix<double, 6, 1> p =
                           mono6_values(frame.local(x));
                       const Eigen::Matrix<double, 1, 12> vals =
                           m.transpose() * data.hct.block<10, 12>(10 * s, 0);
                       S += w * p * vals;
                     });
    }
  }
  const Eigen::Matrix<double, 6, 6> Ginv = G.ldlt().solve(
      Eigen::Matrix<double, 6, 6>::Identity());
  bubble_from_morley_[t] = Ginv * R;
  bubble_from_hct_[t] = -(Ginv * S) * dof_scaling(data.h).asDiagonal();
}

std::array<int, CompanionOperator::local_dofs> CompanionOperator::local_dof_ids(
    int t) const {
  const Triangulation& mesh = morley_->mesh();
  const int nv = mesh.vertex_count();
  const int ne = mesh.edge_count();
  const auto& tri = mesh.triangle(t);
  std::array<int, local_dofs> ids{};
  for (int l = 0; l < 3; ++l) {
    ids[l] = tri[l];
    ids[3 + 2 * l] = nv + tri[l];
    ids[4 + 2 * l] = 2 * nv + tri[l];
    ids[9 + l] = 3 * nv + mesh.triangle_edge(t, l);
  }
  for (int m = 0; m < 6; ++m) ids[12 + m] = 3 * nv + ne + 6 * t + m;
  return ids;
}

void CompanionOperator::build_dof_matrix() {
  const Triangulation& mesh = morley_->mesh();
  const int nv = mesh.vertex_count();
  const int ne = mesh.edge_count();
  const int nt = mesh.triangle_count();
  n_dofs_ = 3 * nv + ne + 6 * nt;

  // Morley global dof per vertex/edge
  std::vector<int> vdof(nv, -1), edof(ne, -1);
  for (int t = 0; t < nt; ++t)
    for (int l = 0; l < 3; ++l) {
      vdof[mesh.triangle(t)[l]] = morley_->global_dof(t, l);
      edof[mesh.triangle_edge(t, l)] = morley_->global_dof(t, 3 + l);
    }

  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> triplets;
  // values and edge means are the Morley dofs themselves
  for (int v = 0; v < nv; ++v)
    if (vdof[v] >= 0) triplets.emplace_back(v, vdof[v], 1.0);
  for (int e = 0; e < ne; ++e)
    if (edof[e] >= 0) triplets.emplace_back(3 * nv + e, edof[e], 1.0);
  // interior vertex gradients average the one-sided Morley gradients
  std::array<Evaluation, 6> basis;
  for (int v = 0; v < nv; ++v) {
    if (mesh.vertex_on_boundary(v)) continue;
    const auto& tris = mesh.triangles_at_vertex(v);
    const double w = 1.0 / static_cast<double>(tris.size());
    for (int t : tris) {
      morley_->eval_basis(t, mesh.vertex(v), basis);
      for (int a = 0; a < 6; ++a) {
        const int g = morley_->global_dof(t, a);
        if (g < 0) continue;
        triplets.emplace_back(nv + v, g, w * basis[a].gradient.x());
        triplets.emplace_back(2 * nv + v, g, w * basis[a].gradient.y());
      }
    }
  }

  Eigen::SparseMatrix<double, Eigen::RowMajor> hct_rows(3 * nv + ne,
                                                        morley_->dim());
  hct_rows.setFromTriplets(triplets.begin(), triplets.end());

  // bubble rows compose the responses with the rows above
  for (int t = 0; t < nt; ++t) {
    const auto ids = local_dof_ids(t);
    const auto& BM = bubble_from_morley_[t];
    const auto& BH = bubble_from_hct_[t];
    for (int m = 0; m < 6; ++m) {
      std::map<int, double> row;
      for (int a = 0; a < 6; ++a) {
        const int g = morley_->global_dof(t, a);
        if (g >= 0) row[g] += BM(m, a);
      }
      for (int d = 0; d < 12; ++d) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
                 hct_rows, ids[d]);
             it; ++it)
          row[static_cast<int>(it.col())] += BH(m, d) * it.value();
      }
      for (const auto& [col, val] : row)
        triplets.emplace_back(3 * nv + ne + 6 * t + m, col, val);
    }
  }

  dof_matrix_.resize(n_dofs_, morley_->dim());
  dof_matrix_.setFromTriplets(triplets.begin(), triplets.end());
  dof_matrix_.makeCompressed();
}

int CompanionOperator::find_subtriangle(int t, const Eigen::Vector2d& x) const {
  const Triangulation& mesh = morley_->mesh();
  const auto& tri = mesh.triangle(t);
  const Eigen::Vector2d c = mesh.centroid(t);
  int best = 0;
  double best_min = -1e300;
  for (int s = 0; s < 3; ++s) {
    const Eigen::Vector2d p0 = mesh.vertex(tri[s]);
    const Eigen::Vector2d p1 = mesh.vertex(tri[(s + 1) % 3]);
    const double area2 = (p1.x() - p0.x()) * (c.y() - p0.y()) -
                         (c.x() - p0.x()) * (p1.y() - p0.y());
    const double l0 = ((p1.x() - x.x()) * (c.y() - x.y()) -
                       (c.x() - x.x()) * (p1.y() - x.y())) / area2;
    const double l1 = ((c.x() - x.x()) * (p0.y() - x.y()) -
                       (p0.x() - x.x()) * (c.y() - x.y())) / area2;
    const double l2 = 1.0 - l0 - l1;
    const double mn = std::min({l0, l1, l2});
    if (mn > best_min) {
      best_min = mn;
      best = s;
    }
  }
  return best;
}

Evaluation CompanionOperator::evaluate(const Eigen::VectorXd& dofs, int t,
                                       const Eigen::Vector2d& x) const {
  const TriangleData& data = tri_data_[t];
  const auto ids = local_dof_ids(t);
  Eigen::Matrix<double, 12, 1> d;
  for (int k = 0; k < 12; ++k) d[k] = dofs[ids[k]];
  d = d.cwiseProduct(dof_scaling(data.h));
  const Eigen::Matrix<double, 30, 1> coeffs = data.hct * d;

  const int s = find_subtriangle(t, x);
  const Eigen::Vector2d p = (x - data.center) / data.h;
  const Eigen::Matrix<double, 10, 1> block = coeffs.segment<10>(10 * s);

  Evaluation out;
  out.value = mono10_values(p).dot(block);
  out.gradient = (mono10_gradients(p).transpose() * block) / data.h;
  const Eigen::Vector3d h3 =
      mono10_hessians(p).transpose() * block / (data.h * data.h);
  out.hessian << h3[0], h3[1], h3[1], h3[2];

  // bubble part
  Eigen::Matrix<double, 6, 1> q;
  for (int m = 0; m < 6; ++m) q[m] = dofs[ids[12 + m]];
  const BubbleKernel B = bubble_squared(morley_->mesh(), t, x);
  const double qv = mono6_values(p).dot(q);
  const Eigen::Vector2d qg = (mono6_gradients(p).transpose() * q) / data.h;
  const Eigen::Vector3d qh3 =
      mono6_hessians().transpose() * q / (data.h * data.h);
  Eigen::Matrix2d qh;
  qh << qh3[0], qh3[1], qh3[1], qh3[2];

  out.value += B.value * qv;
  out.gradient += qv * B.gradient + B.value * qg;
  out.hessian += qv * B.hessian + B.gradient * qg.transpose() +
                 qg * B.gradient.transpose() + B.value * qh;
  return out;
}

Evaluation CompanionOperator::eval_local_basis(int t, int d,
                                               const Eigen::Vector2d& x) const {
  const TriangleData& data = tri_data_[t];
  const Eigen::Vector2d p = (x - data.center) / data.h;
  Evaluation out;
  if (d < 12) {
    const double scale = dof_scaling(data.h)[d];
    const int s = find_subtriangle(t, x);
    const Eigen::Matrix<double, 10, 1> block =
        data.hct.block<10, 1>(10 * s, d) * scale;
    out.value = mono10_values(p).dot(block);
    out.gradient = (mono10_gradients(p).transpose() * block) / data.h;
    const Eigen::Vector3d h3 =
        mono10_hessians(p).transpose() * block / (data.h * data.h);
    out.hessian << h3[0], h3[1], h3[1], h3[2];
    return out;
  }
  const int m = d - 12;
  const BubbleKernel B = bubble_squared(morley_->mesh(), t, x);
  const double pv = mono6_values(p)[m];
  const Eigen::Vector2d pg = mono6_gradients(p).row(m).transpose() / data.h;
  const Eigen::Vector3d ph3 = mono6_hessians().row(m).transpose() /
                              (data.h * data.h);
  Eigen::Matrix2d ph;
  ph << ph3[0], ph3[1], ph3[1], ph3[2];
  out.value = B.value * pv;
  out.gradient = pv * B.gradient + B.value * pg;
  out.hessian = pv * B.hessian + B.gradient * pg.transpose() +
                pg * B.gradient.transpose() + B.value * ph;
  return out;
}

C1Function CompanionOperator::apply(const FeFunction& morley_function) const {
  if (&morley_function.space() != morley_.get())
    throw Error("transfer_error",
                "companion input must live on the operator's Morley space");
  return C1Function(shared_from_this(), dof_matrix_ * morley_function.coeffs());
}

C1Function::C1Function(std::shared_ptr<const CompanionOperator> op,
                       Eigen::VectorXd dofs)
    : op_(std::move(op)), dofs_(std::move(dofs)) {
  if (dofs_.size() != op_->dof_count())
    throw Error("transfer_error", "companion dof vector has wrong length");
}

Evaluation C1Function::evaluate(int tri, const Eigen::Vector2d& x) const {
  return op_->evaluate(dofs_, tri, x);
}

FeFunction morley_interpolate(const Evaluable& v,
                              std::shared_ptr<const FeSpace> morley_space) {
  const FeSpace& space = *morley_space;
  if (space.scheme() != Scheme::Morley)
    throw Error("transfer_error", "morley_interpolate needs a Morley space");
  const Triangulation& mesh = space.mesh();
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(space.dim());

  // recover vertex/edge dof ids
  std::vector<int> vdof(mesh.vertex_count(), -1), edof(mesh.edge_count(), -1);
  for (int t = 0; t < mesh.triangle_count(); ++t)
    for (int l = 0; l < 3; ++l) {
      vdof[mesh.triangle(t)[l]] = space.global_dof(t, l);
      edof[mesh.triangle_edge(t, l)] = space.global_dof(t, 3 + l);
    }

  for (int z = 0; z < mesh.vertex_count(); ++z) {
    if (vdof[z] < 0) continue;
    const auto& tris = mesh.triangles_at_vertex(z);
    double sum = 0.0;
    for (int t : tris) sum += v.evaluate(t, mesh.vertex(z)).value;
    coeffs[vdof[z]] = sum / static_cast<double>(tris.size());
  }
  const QuadratureRule rule = edge_rule(v.polynomial_degree() == 2 ? 1 : 10);
  for (int e = 0; e < mesh.edge_count(); ++e) {
    if (edof[e] < 0) continue;
    const Edge& edge = mesh.edge(e);
    double mean = 0.0;
    for (int q = 0; q < rule.size(); ++q) {
      const double s = rule.points(q, 0);
      const Eigen::Vector2d x = (1.0 - s) * mesh.vertex(edge.vertices[0]) +
                                s * mesh.vertex(edge.vertices[1]);
      const double dplus = edge.normal.dot(v.evaluate(edge.tri_plus, x).gradient);
      const double dminus = edge.normal.dot(v.evaluate(edge.tri_minus, x).gradient);
      mean += rule.weights[q] * 0.5 * (dplus + dminus);
    }
    coeffs[edof[e]] = mean;
  }
  return FeFunction(std::move(morley_space), std::move(coeffs));
}

Eigen::SparseMatrix<double> morley_interpolation_matrix(const FeSpace& from,
                                                        const FeSpace& morley) {
  if (morley.scheme() != Scheme::Morley)
    throw Error("transfer_error", "target space must be Morley");
  if (&from.mesh() != &morley.mesh())
    throw Error("transfer_error", "spaces must share one triangulation");
  const Triangulation& mesh = morley.mesh();

  std::vector<int> vdof(mesh.vertex_count(), -1), edof(mesh.edge_count(), -1);
  for (int t = 0; t < mesh.triangle_count(); ++t)
    for (int l = 0; l < 3; ++l) {
      vdof[mesh.triangle(t)[l]] = morley.global_dof(t, l);
      edof[mesh.triangle_edge(t, l)] = morley.global_dof(t, 3 + l);
    }

  std::vector<Eigen::Triplet<double>> triplets;
  std::array<Evaluation, 6> basis;
  for (int z = 0; z < mesh.vertex_count(); ++z) {
    if (vdof[z] < 0) continue;
    const auto& tris = mesh.triangles_at_vertex(z);
    const double w = 1.0 / static_cast<double>(tris.size());
    for (int t : tris) {
      from.eval_basis(t, mesh.vertex(z), basis);
      for (int a = 0; a < 6; ++a) {
        const int g = from.global_dof(t, a);
        if (g >= 0) triplets.emplace_back(vdof[z], g, w * basis[a].value);
      }
    }
  }
  for (int e = 0; e < mesh.edge_count(); ++e) {
    if (edof[e] < 0) continue;
    const Edge& edge = mesh.edge(e);
    // the normal derivative of a P2 function is affine along the edge, so
    // the midpoint value equals the mean
    for (int t : {edge.tri_plus, edge.tri_minus}) {
      from.eval_basis(t, edge.midpoint, basis);
      for (int a = 0; a < 6; ++a) {
        const int g = from.global_dof(t, a);
        if (g >= 0)
          triplets.emplace_back(edof[e], g,
                                0.5 * edge.normal.dot(basis[a].gradient));
      }
    }
  }
  Eigen::SparseMatrix<double> L(morley.dim(), from.dim());
  L.setFromTriplets(triplets.begin(), triplets.end());
  L.makeCompressed();
  return L;
}

FeFunction transfer_to_c0ip(const FeFunction& morley_function,
                            std::shared_ptr<const FeSpace> c0ip_space) {
  const FeSpace& target = *c0ip_space;
  if (target.scheme() != Scheme::C0IP)
    throw Error("transfer_error", "transfer target must be the C0IP space");
  const FeSpace& source = morley_function.space();
  if (source.scheme() != Scheme::Morley || &source.mesh() != &target.mesh())
    throw Error("transfer_error", "transfer input must be Morley on the same mesh");
  const Triangulation& mesh = target.mesh();
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(target.dim());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    for (int l = 0; l < 3; ++l) {
      const int g = target.global_dof(t, l);
      if (g >= 0)
        coeffs[g] = morley_function.evaluate(t, mesh.vertex(mesh.triangle(t)[l])).value;
      const int ge = target.global_dof(t, 3 + l);
      if (ge >= 0) {
        const Edge& edge = mesh.edge(mesh.triangle_edge(t, l));
        const double vp = morley_function.evaluate(edge.tri_plus, edge.midpoint).value;
        const double vm = morley_function.evaluate(edge.tri_minus, edge.midpoint).value;
        coeffs[ge] = 0.5 * (vp + vm);
      }
    }
  }
  return FeFunction(std::move(c0ip_space), std::move(coeffs));
}

std::shared_ptr<const Evaluable> apply_smoother(
    Smoother tag, const FeFunction& v,
    std::shared_ptr<const FeSpace> morley_space,
    std::shared_ptr<const CompanionOperator> companion) {
  switch (tag) {
    case Smoother::Id:
      return std::make_shared<FeFunction>(v);
    case Smoother::IM:
      return std::make_shared<FeFunction>(
          morley_interpolate(v, std::move(morley_space)));
    case Smoother::JIM: {
      FeFunction vm = morley_interpolate(v, std::move(morley_space));
      return std::make_shared<C1Function>(companion->apply(vm));
    }
  }
  throw Error("transfer_error", "unknown smoother tag");
}

}  // namespace biharm
