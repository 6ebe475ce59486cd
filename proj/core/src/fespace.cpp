#include "biharm/fespace.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace biharm {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Morley: return "morley";
    case Scheme::DG: return "dg";
    case Scheme::C0IP: return "c0ip";
    case Scheme::WOPSIP: return "wopsip";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "morley") return Scheme::Morley;
  if (name == "dg") return Scheme::DG;
  if (name == "c0ip") return Scheme::C0IP;
  if (name == "wopsip") return Scheme::WOPSIP;
  throw Error("config_error", "unknown scheme '" + name + "'");
}

namespace {

// gradients of the barycentric coordinates (constant per triangle)
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

// scaled monomial frame {1, x, y, x^2, xy, y^2} around the triangle centroid
struct ScaledFrame {
  Eigen::Vector2d center;
  double h;

  Eigen::Vector2d local(const Eigen::Vector2d& x) const { return (x - center) / h; }

  static Eigen::Matrix<double, 6, 1> values(const Eigen::Vector2d& p) {
    Eigen::Matrix<double, 6, 1> m;
    m << 1.0, p.x(), p.y(), p.x() * p.x(), p.x() * p.y(), p.y() * p.y();
    return m;
  }
  static Eigen::Matrix<double, 6, 2> gradients(const Eigen::Vector2d& p) {
    Eigen::Matrix<double, 6, 2> g;
    g << 0, 0, 1, 0, 0, 1, 2 * p.x(), 0, p.y(), p.x(), 0, 2 * p.y();
    return g;
  }
  // constant Hessians: (xx, xy, yy) rows per monomial
  static Eigen::Matrix<double, 6, 3> hessians() {
    Eigen::Matrix<double, 6, 3> h;
    h << 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 2;
    return h;
  }
};

ScaledFrame frame_of(const Triangulation& mesh, int t) {
  return {mesh.centroid(t), mesh.h(t)};
}

}  // namespace

FeSpace::FeSpace(const Triangulation& mesh, Scheme scheme)
    : mesh_(&mesh), scheme_(scheme) {
  const int nt = mesh.triangle_count();
  dof_map_.assign(nt, {-1, -1, -1, -1, -1, -1});

  switch (scheme) {
    case Scheme::DG:
    case Scheme::WOPSIP: {
      for (int t = 0; t < nt; ++t)
        for (int l = 0; l < 6; ++l) dof_map_[t][l] = 6 * t + l;
      dim_ = 6 * nt;
      break;
    }
    case Scheme::Morley:
    case Scheme::C0IP: {
      // interior vertices first, then interior edges
      std::vector<int> vdof(mesh.vertex_count(), -1);
      std::vector<int> edof(mesh.edge_count(), -1);
      int next = 0;
      for (int v = 0; v < mesh.vertex_count(); ++v)
        if (!mesh.vertex_on_boundary(v)) vdof[v] = next++;
      for (int e = 0; e < mesh.edge_count(); ++e)
        if (!mesh.edge(e).on_boundary()) edof[e] = next++;
      dim_ = next;
      for (int t = 0; t < nt; ++t) {
        const auto& tri = mesh.triangle(t);
        for (int l = 0; l < 3; ++l) {
          dof_map_[t][l] = vdof[tri[l]];
          dof_map_[t][3 + l] = edof[mesh.triangle_edge(t, l)];
        }
      }
      break;
    }
  }
  if (scheme == Scheme::Morley) build_morley_basis();
}

void FeSpace::build_morley_basis() {
  const Triangulation& mesh = *mesh_;
  morley_coeff_.resize(mesh.triangle_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const ScaledFrame frame = frame_of(mesh, t);
    Eigen::Matrix<double, 6, 6> dual;
    const auto& tri = mesh.triangle(t);
    for (int l = 0; l < 3; ++l)
      dual.row(l) = ScaledFrame::values(frame.local(mesh.vertex(tri[l]))).transpose();
    for (int l = 0; l < 3; ++l) {
      // mean normal derivative over edge l; the integrand is affine along
      // the edge, so the midpoint value is the exact mean. Row scaled by
      // h_K to keep the system O(1).
      const Edge& e = mesh.edge(mesh.triangle_edge(t, l));
      const Eigen::Matrix<double, 6, 2> grads =
          ScaledFrame::gradients(frame.local(e.midpoint));
      dual.row(3 + l) = (grads * e.normal).transpose();
    }
    Eigen::Matrix<double, 6, 6> coeff = dual.fullPivLu().solve(
        Eigen::Matrix<double, 6, 6>::Identity());
    // undo the row scaling: edge-dof basis columns pick up a factor h_K
    coeff.col(3) *= frame.h;
    coeff.col(4) *= frame.h;
    coeff.col(5) *= frame.h;
    morley_coeff_[t] = coeff;
  }
}

void FeSpace::eval_basis(int tri, const Eigen::Vector2d& x,
                         std::array<Evaluation, 6>& out) const {
  if (scheme_ == Scheme::Morley) {
    const ScaledFrame frame = frame_of(*mesh_, tri);
    const Eigen::Vector2d p = frame.local(x);
    const Eigen::Matrix<double, 6, 1> vals = ScaledFrame::values(p);
    const Eigen::Matrix<double, 6, 2> grads = ScaledFrame::gradients(p);
    const Eigen::Matrix<double, 6, 3> hess = ScaledFrame::hessians();
    const auto& coeff = morley_coeff_[tri];
    for (int a = 0; a < 6; ++a) {
      const Eigen::Matrix<double, 6, 1> c = coeff.col(a);
      out[a].value = c.dot(vals);
      out[a].gradient = (grads.transpose() * c) / frame.h;
      const Eigen::Vector3d h2 = hess.transpose() * c / (frame.h * frame.h);
      out[a].hessian << h2[0], h2[1], h2[1], h2[2];
    }
    return;
  }
  // P2 Lagrange (vertices + edge midpoints)
  const Eigen::Vector3d lambda = mesh_->barycentric(tri, x);
  const auto grad = barycentric_gradients(*mesh_, tri);
  for (int i = 0; i < 3; ++i) {
    Evaluation& ev = out[i];
    ev.value = lambda[i] * (2.0 * lambda[i] - 1.0);
    ev.gradient = (4.0 * lambda[i] - 1.0) * grad[i];
    ev.hessian = 4.0 * grad[i] * grad[i].transpose();
  }
  for (int j = 0; j < 3; ++j) {
    // edge j is opposite vertex j, spanned by vertices j+1 and j+2
    const int p = (j + 1) % 3, q = (j + 2) % 3;
    Evaluation& ev = out[3 + j];
    ev.value = 4.0 * lambda[p] * lambda[q];
    ev.gradient = 4.0 * (lambda[p] * grad[q] + lambda[q] * grad[p]);
    ev.hessian = 4.0 * (grad[p] * grad[q].transpose() + grad[q] * grad[p].transpose());
  }
}

std::array<double, 6> FeSpace::local_dof_values(int tri, const Evaluable& f) const {
  std::array<double, 6> dofs{};
  const auto& tv = mesh_->triangle(tri);
  if (scheme_ == Scheme::Morley) {
    for (int l = 0; l < 3; ++l)
      dofs[l] = f.evaluate(tri, mesh_->vertex(tv[l])).value;
    const QuadratureRule rule = edge_rule(f.polynomial_degree() == 2 ? 1 : 10);
    for (int l = 0; l < 3; ++l) {
      const int e = mesh_->triangle_edge(tri, l);
      const Edge& edge = mesh_->edge(e);
      double mean = 0.0;
      for (int q = 0; q < rule.size(); ++q) {
        const double s = rule.points(q, 0);
        const Eigen::Vector2d x = (1.0 - s) * mesh_->vertex(edge.vertices[0]) +
                                  s * mesh_->vertex(edge.vertices[1]);
        mean += rule.weights[q] * edge.normal.dot(f.evaluate(tri, x).gradient);
      }
      dofs[3 + l] = mean;  // weights sum to one: already the mean value
    }
  } else {
    for (int l = 0; l < 3; ++l)
      dofs[l] = f.evaluate(tri, mesh_->vertex(tv[l])).value;
    for (int l = 0; l < 3; ++l) {
      const Edge& edge = mesh_->edge(mesh_->triangle_edge(tri, l));
      dofs[3 + l] = f.evaluate(tri, edge.midpoint).value;
    }
  }
  return dofs;
}

FeFunction::FeFunction(std::shared_ptr<const FeSpace> space, Eigen::VectorXd coeffs)
    : space_(std::move(space)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != space_->dim())
    throw Error("fespace_error", "coefficient vector length " +
                                     std::to_string(coeffs_.size()) +
                                     " does not match space dimension " +
                                     std::to_string(space_->dim()));
}

Evaluation FeFunction::evaluate(int tri, const Eigen::Vector2d& x) const {
  std::array<Evaluation, 6> basis;
  space_->eval_basis(tri, x, basis);
  Evaluation out;
  for (int l = 0; l < 6; ++l) {
    const int g = space_->global_dof(tri, l);
    if (g < 0) continue;
    const double c = coeffs_[g];
    out.value += c * basis[l].value;
    out.gradient += c * basis[l].gradient;
    out.hessian += c * basis[l].hessian;
  }
  return out;
}

void FeFunction::save(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw Error("io_error", "cannot write " + file.string());
  out << "biharm-fefunction 1\n";
  out << "scheme " << to_string(space_->scheme()) << '\n';
  out << "mesh-hash " << std::hex << space_->mesh().content_hash() << std::dec << '\n';
  out << "dim " << space_->dim() << '\n';
  out.precision(17);
  for (Eigen::Index i = 0; i < coeffs_.size(); ++i) out << coeffs_[i] << '\n';
}

FeFunction FeFunction::load(const std::filesystem::path& file,
                            std::shared_ptr<const FeSpace> space) {
  std::ifstream in(file);
  if (!in) throw Error("io_error", "cannot open " + file.string());
  std::string magic, word;
  int version = 0;
  in >> magic >> version;
  if (magic != "biharm-fefunction" || version != 1)
    throw Error("io_error", file.string() + ": not a coefficient file");
  std::string scheme_name;
  in >> word >> scheme_name;
  if (word != "scheme" || scheme_from_string(scheme_name) != space->scheme())
    throw Error("io_error", file.string() + ": scheme tag mismatch");
  std::uint64_t hash = 0;
  in >> word >> std::hex >> hash >> std::dec;
  if (word != "mesh-hash" || hash != space->mesh().content_hash())
    throw Error("io_error", file.string() + ": mesh hash mismatch");
  int dim = 0;
  in >> word >> dim;
  if (word != "dim" || dim != space->dim())
    throw Error("io_error", file.string() + ": dimension mismatch");
  Eigen::VectorXd coeffs(dim);
  for (int i = 0; i < dim; ++i)
    if (!(in >> coeffs[i]))
      throw Error("io_error", file.string() + ": truncated coefficient list");
  return FeFunction(std::move(space), std::move(coeffs));
}

VectorFeFunction::VectorFeFunction(FeFunction u, FeFunction v)
    : u_(std::move(u)), v_(std::move(v)) {
  if (&u_.space() != &v_.space())
    throw Error("fespace_error", "vector components must share one space");
}

TraceJump trace_jump(const Evaluable& f, const Triangulation& mesh, int e, double s) {
  const Edge& edge = mesh.edge(e);
  const Eigen::Vector2d x = (1.0 - s) * mesh.vertex(edge.vertices[0]) +
                            s * mesh.vertex(edge.vertices[1]);
  const Evaluation plus = f.evaluate(edge.tri_plus, x);
  TraceJump out;
  if (edge.on_boundary()) {
    out.value_jump = plus.value;
    out.normal_derivative_jump = edge.normal.dot(plus.gradient);
  } else {
    const Evaluation minus = f.evaluate(edge.tri_minus, x);
    out.value_jump = plus.value - minus.value;
    out.normal_derivative_jump = edge.normal.dot(plus.gradient - minus.gradient);
  }
  return out;
}

EdgeTraces edge_traces(const Evaluable& f, const Triangulation& mesh, int e,
                       const Eigen::Vector2d& x) {
  const Edge& edge = mesh.edge(e);
  EdgeTraces out;
  out.plus = f.evaluate(edge.tri_plus, x);
  out.minus = edge.on_boundary() ? out.plus : f.evaluate(edge.tri_minus, x);
  return out;
}

namespace {

// integrates fn(tri, x, w) over every triangle, splitting into the
// Clough-Tocher subtriangles when the integrand requires it
template <typename Fn>
void integrate_mesh(const Triangulation& mesh, int degree, bool subtriangles,
                    Fn&& fn) {
  const QuadratureRule rule = triangle_rule(degree);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    if (!subtriangles) {
      for_each_point(mesh, t, rule, [&](const Eigen::Vector2d& x, double w) {
        fn(t, x, w);
      });
    } else {
      const auto& tri = mesh.triangle(t);
      const Eigen::Vector2d c = mesh.centroid(t);
      for (int s = 0; s < 3; ++s) {
        const Eigen::Vector2d p0 = mesh.vertex(tri[s]);
        const Eigen::Vector2d p1 = mesh.vertex(tri[(s + 1) % 3]);
        for_each_point(p0, p1, c, rule, [&](const Eigen::Vector2d& x, double w) {
          fn(t, x, w);
        });
      }
    }
  }
}

}  // namespace

std::vector<Eigen::Matrix2d> project_pw_constant_hessian(const Evaluable& f,
                                                         const Triangulation& mesh,
                                                         int quad_degree) {
  std::vector<Eigen::Matrix2d> means(mesh.triangle_count(), Eigen::Matrix2d::Zero());
  integrate_mesh(mesh, quad_degree, f.on_subtriangles(),
                 [&](int t, const Eigen::Vector2d& x, double w) {
                   means[t] += w * f.evaluate(t, x).hessian;
                 });
  for (int t = 0; t < mesh.triangle_count(); ++t) means[t] /= mesh.area(t);
  return means;
}

double hessian_oscillation(const Evaluable& f, const Triangulation& mesh,
                           int quad_degree) {
  const auto means = project_pw_constant_hessian(f, mesh, quad_degree);
  double sq = 0.0;
  integrate_mesh(mesh, quad_degree, f.on_subtriangles(),
                 [&](int t, const Eigen::Vector2d& x, double w) {
                   const Eigen::Matrix2d d = f.evaluate(t, x).hessian - means[t];
                   sq += w * d.squaredNorm();
                 });
  return std::sqrt(sq);
}

}  // namespace biharm
