#include "oracles.hpp"

#include <cmath>

namespace oracle {

namespace {
constexpr int kRow[6] = {0, 1, 2, 1, 0, 0};
constexpr int kCol[6] = {0, 1, 2, 2, 2, 1};
} // namespace

Mat3 stress_tensor(const Vec6& v) {
    Mat3 t = Mat3::Zero();
    for (int k = 0; k < 6; ++k) {
        t(kRow[k], kCol[k]) = v(k);
        t(kCol[k], kRow[k]) = v(k);
    }
    return t;
}

Vec6 stress_voigt(const Mat3& t) {
    Vec6 v;
    for (int k = 0; k < 6; ++k) v(k) = t(kRow[k], kCol[k]);
    return v;
}

Mat3 strain_tensor(const Vec6& v) {
    Mat3 t = Mat3::Zero();
    for (int k = 0; k < 6; ++k) {
        const double x = kRow[k] == kCol[k] ? v(k) : 0.5 * v(k);
        t(kRow[k], kCol[k]) = x;
        t(kCol[k], kRow[k]) = x;
    }
    return t;
}

Vec6 strain_voigt(const Mat3& t) {
    Vec6 v;
    for (int k = 0; k < 6; ++k)
        v(k) = kRow[k] == kCol[k] ? t(kRow[k], kCol[k]) : 2.0 * t(kRow[k], kCol[k]);
    return v;
}

double energy_contraction(const Vec6& stress, const Vec6& strain) {
    const Mat3 s = stress_tensor(stress);
    const Mat3 e = strain_tensor(strain);
    double sum = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) sum += s(i, j) * e(i, j);
    return sum;
}

Vec3 traction(const Vec6& stress, const Vec3& n) { return stress_tensor(stress) * n; }

Mat6 rotate_stiffness_tensor(const Mat3& p, const Mat6& c6) {
    double c4[3][3][3][3];
    for (int k = 0; k < 6; ++k)
        for (int l = 0; l < 6; ++l) {
            const int i = kRow[k], j = kCol[k], a = kRow[l], b = kCol[l];
            c4[i][j][a][b] = c6(k, l);
            c4[j][i][a][b] = c6(k, l);
            c4[i][j][b][a] = c6(k, l);
            c4[j][i][b][a] = c6(k, l);
        }
    double r4[3][3][3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l) {
                    double sum = 0.0;
                    for (int a = 0; a < 3; ++a)
                        for (int b = 0; b < 3; ++b)
                            for (int c = 0; c < 3; ++c)
                                for (int d = 0; d < 3; ++d)
                                    sum += p(i, a) * p(j, b) * p(k, c) * p(l, d) * c4[a][b][c][d];
                    r4[i][j][k][l] = sum;
                }
    Mat6 out;
    for (int k = 0; k < 6; ++k)
        for (int l = 0; l < 6; ++l) out(k, l) = r4[kRow[k]][kCol[k]][kRow[l]][kCol[l]];
    return out;
}

Vec6 rotate_stress_tensor(const Mat3& p, const Vec6& stress) {
    return stress_voigt(p * stress_tensor(stress) * p.transpose());
}

BlockSolution solve_block(const Mat6& c1, const Mat6& c2, const Vec6& dsig1, const Vec6& dsig2,
                          double f1, const Vec3& n, const Vec6& eps_h) {
    const double f2 = 1.0 - f1;
    // H columns span the admissible strain-jump subspace. Built with an
    // explicit loop from sym(b (x) n) for the three unit b vectors.
    Eigen::Matrix<double, 6, 3> h;
    for (int col = 0; col < 3; ++col) {
        Vec3 b = Vec3::Zero();
        b(col) = 1.0;
        const Mat3 jump = 0.5 * (b * n.transpose() + n * b.transpose());
        h.col(col) = strain_voigt(jump);
    }
    const Mat6 proj =
        Mat6::Identity() - h * (h.transpose() * h).inverse() * h.transpose();

    // Unknowns x = (eps1, eps2). Equations: 6 mixture, 3 traction,
    // 6 jump-subspace rows (rank 3).
    Eigen::Matrix<double, 15, 12> a = Eigen::Matrix<double, 15, 12>::Zero();
    Eigen::Matrix<double, 15, 1> rhs = Eigen::Matrix<double, 15, 1>::Zero();
    a.block<6, 6>(0, 0) = f1 * Mat6::Identity();
    a.block<6, 6>(0, 6) = f2 * Mat6::Identity();
    rhs.segment<6>(0) = eps_h;

    Eigen::Matrix<double, 3, 6> ht;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 6; ++c) {
            // Traction rows act on stress vectors: sigma . n in component r.
            Mat3 unit = Mat3::Zero();
            unit(kRow[c], kCol[c]) = 1.0;
            unit(kCol[c], kRow[c]) = 1.0;
            ht(r, c) = (unit * n)(r);
        }
    a.block<3, 6>(6, 0) = -ht * c1;
    a.block<3, 6>(6, 6) = ht * c2;
    rhs.segment<3>(6) = ht * (dsig1 - dsig2);

    a.block<6, 6>(9, 0) = proj;
    a.block<6, 6>(9, 6) = -proj;

    const Eigen::Matrix<double, 12, 1> x = a.colPivHouseholderQr().solve(rhs);
    BlockSolution sol;
    sol.strain1 = x.head<6>();
    sol.strain2 = x.tail<6>();
    sol.stress1 = c1 * sol.strain1 + dsig1;
    sol.stress2 = c2 * sol.strain2 + dsig2;
    sol.stress_h = f1 * sol.stress1 + f2 * sol.stress2;
    return sol;
}

Mat6 random_spd(matnet::Rng& rng) {
    Mat6 a;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) a(i, j) = rng.normal();
    return a * a.transpose() + 0.5 * Mat6::Identity();
}

Vec3 random_unit(matnet::Rng& rng) {
    Vec3 v;
    do {
        v = {rng.normal(), rng.normal(), rng.normal()};
    } while (v.norm() < 1e-3);
    return v.normalized();
}

double Uniaxial1D::stress_at(double p) const { return mat.yield_stress(p); }

double Uniaxial1D::axial_strain_at(double p) const {
    return mat.yield_stress(p) / mat.youngs + p;
}

double Uniaxial1D::lateral_strain_at(double p) const {
    return -mat.poisson * mat.yield_stress(p) / mat.youngs - 0.5 * p;
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp(i) += step;
        xm(i) -= step;
        g(i) = (f(xp) - f(xm)) / (2.0 * step);
    }
    return g;
}

double scalar_loss(const std::vector<std::array<Mat6, 2>>& predictions_targets, double eta,
                   double relu_sum, double xi) {
    double data = 0.0;
    for (const auto& [chat, c] : predictions_targets) {
        double num = 0.0, den = 0.0;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) {
                num += (c(i, j) - chat(i, j)) * (c(i, j) - chat(i, j));
                den += c(i, j) * c(i, j);
            }
        data += num / den;
    }
    data /= 2.0 * static_cast<double>(predictions_targets.size());
    return data + eta * (relu_sum - xi) * (relu_sum - xi);
}

} // namespace oracle
