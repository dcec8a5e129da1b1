#include "dense_oracle.hpp"

#include <unsupported/Eigen/KroneckerProduct>

namespace testref {

Mat pauli_x() {
    Mat m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

Mat pauli_y() {
    Mat m(2, 2);
    m << 0, cplx(0, -1), cplx(0, 1), 0;
    return m;
}

Mat pauli_z() {
    Mat m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

Mat rx(double theta) {
    return std::cos(theta / 2) * Mat::Identity(2, 2) - cplx(0, std::sin(theta / 2)) * pauli_x();
}

Mat embed1(const Mat &op, int q, int n) {
    Mat out = Mat::Identity(1, 1);
    for (int k = 0; k < n; ++k) {
        Mat f = k == q ? op : Mat(Mat::Identity(2, 2));
        out = Eigen::kroneckerProduct(out, f).eval();
    }
    return out;
}

Mat zz_full(int a, int b, int n, double angle) {
    Mat zz = embed1(pauli_z(), a, n) * embed1(pauli_z(), b, n);
    // exp(i angle ZZ) = cos(angle) I + i sin(angle) ZZ since (ZZ)^2 = I.
    return std::cos(angle) * Mat::Identity(zz.rows(), zz.cols()) + cplx(0, std::sin(angle)) * zz;
}

Mat trotter_step_full(const bptns::LatticeGraph &g, double theta) {
    const int n = g.num_vertices();
    Mat xs = Mat::Identity(1 << n, 1 << n);
    for (int v = 0; v < n; ++v) {
        xs = embed1(rx(theta), v, n) * xs;
    }
    Mat zz = Mat::Identity(1 << n, 1 << n);
    for (const auto &e : g.edges()) {
        zz = zz_full(e.a, e.b, n, M_PI / 4) * zz;
    }
    return zz * xs;
}

Vec basis0(int n) {
    Vec v = Vec::Zero(1 << n);
    v[0] = 1.0;
    return v;
}

double expect(const Vec &psi, const Mat &op) { return (psi.adjoint() * op * psi)(0, 0).real() / psi.squaredNorm(); }

Mat random_matrix(int rows, int cols, std::mt19937_64 &rng) {
    std::normal_distribution<double> nd;
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            m(i, j) = cplx(nd(rng), nd(rng));
        }
    }
    return m;
}

Mat random_unitary(int dim, std::mt19937_64 &rng) {
    Eigen::HouseholderQR<Mat> qr(random_matrix(dim, dim, rng));
    return qr.householderQ() * Mat::Identity(dim, dim);
}

}  // namespace testref

namespace testref {

void apply1(Vec &psi, int n, int q, const Mat &u) {
    const Eigen::Index bit = Eigen::Index{1} << (n - 1 - q);
    for (Eigen::Index k = 0; k < psi.size(); ++k) {
        if ((k & bit) == 0) {
            const cplx a = psi[k], b = psi[k | bit];
            psi[k] = u(0, 0) * a + u(0, 1) * b;
            psi[k | bit] = u(1, 0) * a + u(1, 1) * b;
        }
    }
}

void apply2(Vec &psi, int n, int qa, int qb, const Mat &u) {
    const Eigen::Index ba = Eigen::Index{1} << (n - 1 - qa);
    const Eigen::Index bb = Eigen::Index{1} << (n - 1 - qb);
    for (Eigen::Index k = 0; k < psi.size(); ++k) {
        if ((k & ba) == 0 && (k & bb) == 0) {
            const Eigen::Index idx[4] = {k, k | bb, k | ba, k | ba | bb};
            cplx in[4], out[4] = {0, 0, 0, 0};
            for (int r = 0; r < 4; ++r) {
                in[r] = psi[idx[r]];
            }
            for (int r = 0; r < 4; ++r) {
                for (int c = 0; c < 4; ++c) {
                    out[r] += u(r, c) * in[c];
                }
            }
            for (int r = 0; r < 4; ++r) {
                psi[idx[r]] = out[r];
            }
        }
    }
}

Vec evolve(const bptns::LatticeGraph &g, double theta, int n_steps) {
    const int n = g.num_vertices();
    Vec psi = basis0(n);
    Mat zz = Mat::Zero(4, 4);
    const cplx p = std::polar(1.0, M_PI / 4);
    zz(0, 0) = p;
    zz(1, 1) = std::conj(p);
    zz(2, 2) = std::conj(p);
    zz(3, 3) = p;
    for (int s = 0; s < n_steps; ++s) {
        for (int v = 0; v < n; ++v) {
            apply1(psi, n, v, rx(theta));
        }
        for (const auto &e : g.edges()) {
            apply2(psi, n, e.a, e.b, zz);
        }
    }
    return psi;
}

double expect_z(const Vec &psi, int n, int q) {
    const Eigen::Index bit = Eigen::Index{1} << (n - 1 - q);
    double s = 0.0;
    for (Eigen::Index k = 0; k < psi.size(); ++k) {
        s += ((k & bit) ? -1.0 : 1.0) * std::norm(psi[k]);
    }
    return s / psi.squaredNorm();
}

}  // namespace testref
