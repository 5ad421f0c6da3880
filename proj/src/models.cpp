#include "mortv/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <vector>

namespace mortv::models {

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string("model parameter must be positive: ") + name);
}

} // namespace

// ---------------------------------------------------------------------------
// Timoshenko beam

namespace {

struct BeamMesh {
    double length;
    double h; // element length
    int num_elements;
    std::vector<Index> dof_index; // global (w,theta) DOF -> retained index, -1 if eliminated

    Index retained = 0;

    explicit BeamMesh(const BeamParams& p) : length(p.length), num_elements(p.num_elements) {
        h = length / num_elements;
        const Index nodes = num_elements + 1;
        dof_index.assign(2 * nodes, -1);
        for (Index node = 0; node < nodes; ++node) {
            const bool support = (node == 0 || node == nodes - 1);
            if (!support) dof_index[2 * node] = retained++; // w
            dof_index[2 * node + 1] = retained++;           // theta
        }
    }

    Index w_dof(Index node) const { return dof_index[2 * node]; }
    Index theta_dof(Index node) const { return dof_index[2 * node + 1]; }
};

} // namespace

SecondOrderSystem build_beam(const BeamParams& params) {
    require_positive(params.length, "length");
    require_positive(params.elastic_modulus, "elastic_modulus");
    require_positive(params.density, "density");
    require_positive(params.width, "width");
    require_positive(params.height, "height");
    require_positive(params.shear_correction, "shear_correction");
    if (params.num_elements < 2) throw ConfigError("build_beam: num_elements must be >= 2");

    auto mesh = std::make_shared<BeamMesh>(params);
    const double h = mesh->h;
    const double area = params.width * params.height;
    const double inertia = params.width * std::pow(params.height, 3) / 12.0;
    const double ei = params.elastic_modulus * inertia;
    const double g_mod = params.elastic_modulus / (2.0 * (1.0 + params.poisson_ratio));
    const double kga = params.shear_correction * g_mod * area;
    const double rho_a = params.density * area;
    const double rho_i = params.density * inertia;

    // element matrices, DOF order [w1, th1, w2, th2]
    Eigen::Matrix4d ke = Eigen::Matrix4d::Zero();
    // bending, exact integration of linear theta field
    ke(1, 1) += ei / h;
    ke(1, 3) -= ei / h;
    ke(3, 1) -= ei / h;
    ke(3, 3) += ei / h;
    // shear, one-point reduced integration: gamma = (w2-w1)/h - (th1+th2)/2
    const Eigen::Vector4d gvec(-1.0 / h, -0.5, 1.0 / h, -0.5);
    ke += kga * h * gvec * gvec.transpose();

    Eigen::Matrix4d me = Eigen::Matrix4d::Zero();
    const double mw = rho_a * h / 6.0;
    const double mt = rho_i * h / 6.0;
    me(0, 0) = 2 * mw;
    me(0, 2) = mw;
    me(2, 0) = mw;
    me(2, 2) = 2 * mw;
    me(1, 1) = 2 * mt;
    me(1, 3) = mt;
    me(3, 1) = mt;
    me(3, 3) = 2 * mt;

    std::vector<Eigen::Triplet<double>> kt, mt_trips;
    for (int el = 0; el < params.num_elements; ++el) {
        const std::array<Index, 4> gdof = {mesh->w_dof(el), mesh->theta_dof(el),
                                           mesh->w_dof(el + 1), mesh->theta_dof(el + 1)};
        for (int i = 0; i < 4; ++i) {
            if (gdof[i] < 0) continue;
            for (int j = 0; j < 4; ++j) {
                if (gdof[j] < 0) continue;
                kt.emplace_back(gdof[i], gdof[j], ke(i, j));
                mt_trips.emplace_back(gdof[i], gdof[j], me(i, j));
            }
        }
    }
    const Index n = mesh->retained;
    SparseMatrix k(n, n), m(n, n);
    k.setFromTriplets(kt.begin(), kt.end());
    m.setFromTriplets(mt_trips.begin(), mt_trips.end());
    k.makeCompressed();
    m.makeCompressed();
    SparseMatrix d = params.rayleigh_alpha * m + params.rayleigh_beta * k;

    const double length = params.length;
    auto shape_weights = [mesh, length](double p) {
        if (p < -1e-12 || p > length + 1e-12)
            throw PositionOutOfRangeError("beam map queried outside [0, L]");
        p = std::clamp(p, 0.0, length);
        int el = std::min(static_cast<int>(p / mesh->h), mesh->num_elements - 1);
        const double xi = (p - el * mesh->h) / mesh->h;
        Vector out = Vector::Zero(mesh->retained);
        if (mesh->w_dof(el) >= 0) out(mesh->w_dof(el)) = 1.0 - xi;
        if (mesh->w_dof(el + 1) >= 0) out(mesh->w_dof(el + 1)) = xi;
        return out;
    };

    return SecondOrderSystem(SystemMatrix(std::move(m)), SystemMatrix(std::move(d)),
                             SystemMatrix(std::move(k)), shape_weights, shape_weights);
}

// ---------------------------------------------------------------------------
// 1D heat rod

namespace {

// integral over [a, b] of phi(x) * hat(x), both linear on the interval
double gauss2_product(double a, double b, const std::function<double(double)>& f,
                      const std::function<double(double)>& g) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double x1 = mid - half / std::sqrt(3.0);
    const double x2 = mid + half / std::sqrt(3.0);
    return half * (f(x1) * g(x1) + f(x2) * g(x2));
}

} // namespace

MovingBoundarySystem build_heat_rod(const HeatRodParams& params, Trajectory trajectory) {
    require_positive(params.length, "length");
    require_positive(params.diffusivity, "diffusivity");
    if (params.num_nodes < 3) throw ConfigError("build_heat_rod: num_nodes must be >= 3");
    const Index n = params.num_nodes;
    const double hx = params.length / (n + 1);
    if (params.source_width < hx)
        throw ConfigError("build_heat_rod: source_width must be >= grid spacing");

    std::vector<Eigen::Triplet<double>> et, at;
    for (Index i = 0; i < n; ++i) {
        if (params.fem_mass) {
            et.emplace_back(i, i, 4.0 * hx / 6.0);
            if (i + 1 < n) {
                et.emplace_back(i, i + 1, hx / 6.0);
                et.emplace_back(i + 1, i, hx / 6.0);
            }
        } else {
            et.emplace_back(i, i, 1.0);
        }
        const double scale = params.fem_mass ? params.diffusivity / hx
                                             : params.diffusivity / (hx * hx);
        at.emplace_back(i, i, -2.0 * scale);
        if (i + 1 < n) {
            at.emplace_back(i, i + 1, scale);
            at.emplace_back(i + 1, i, scale);
        }
    }
    SparseMatrix e(n, n), a(n, n);
    e.setFromTriplets(et.begin(), et.end());
    a.setFromTriplets(at.begin(), at.end());
    e.makeCompressed();
    a.makeCompressed();

    const double length = params.length;
    const double wsrc = params.source_width;
    const bool fem = params.fem_mass;

    auto b_map = [n, hx, length, wsrc, fem](double p) {
        if (p < -1e-12 || p > length + 1e-12)
            throw PositionOutOfRangeError("heat rod map queried outside [0, L]");
        p = std::clamp(p, 0.0, length);
        const double lo = p - 0.5 * wsrc;
        const double hi = p + 0.5 * wsrc;
        auto source = [p, wsrc](double x) {
            const double d = std::abs(x - p);
            return d >= 0.5 * wsrc ? 0.0 : (2.0 / wsrc) * (1.0 - 2.0 * d / wsrc);
        };
        Matrix out = Matrix::Zero(n, 1);
        if (fem) {
            // node i sits at x = (i+1) hx; phi_i supported on [x - hx, x + hx]
            const Index ifirst = std::max<Index>(0, static_cast<Index>(std::floor(lo / hx)) - 1);
            const Index ilast = std::min<Index>(n - 1, static_cast<Index>(std::ceil(hi / hx)));
            for (Index i = ifirst; i <= ilast; ++i) {
                const double xi = (i + 1) * hx;
                auto phi = [xi, hx](double x) {
                    const double d = std::abs(x - xi);
                    return d >= hx ? 0.0 : 1.0 - d / hx;
                };
                // subdivide at every kink of phi * source inside the overlap
                std::vector<double> pts = {std::max(0.0, std::max(lo, xi - hx)),
                                           std::min(length, std::min(hi, xi + hx))};
                if (pts[0] >= pts[1]) continue;
                for (double cand : {p, xi, xi - hx, xi + hx})
                    if (cand > pts[0] && cand < pts[1]) pts.push_back(cand);
                std::sort(pts.begin(), pts.end());
                double acc = 0.0;
                for (std::size_t s = 0; s + 1 < pts.size(); ++s)
                    acc += gauss2_product(pts[s], pts[s + 1], phi, source);
                out(i, 0) = acc;
            }
        } else {
            for (Index i = 0; i < n; ++i) {
                const double xi = (i + 1) * hx;
                out(i, 0) = hx * source(xi);
            }
        }
        return out;
    };

    auto c_map = [b_map](double p) { return Matrix(b_map(p).transpose()); };

    return MovingBoundarySystem(SystemMatrix(std::move(e)), SystemMatrix(std::move(a)), b_map,
                                c_map, std::move(trajectory), Coupling::Collocated);
}

} // namespace mortv::models
