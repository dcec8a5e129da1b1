#pragma once

// Labeled dense complex tensors.
//
// Every tensor carries an ordered list of Index objects. Two indices are the
// same leg iff their uids match; contraction sums over every shared uid. Data
// is stored row-major (last index fastest).

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bptns {

using cplx = std::complex<double>;
using MatrixC = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Index {
    std::uint64_t uid = 0;
    int dim = 1;
    std::string tag;

    /// Partner index used for the bra copy of a leg in a doubled network.
    /// Priming is an involution: i.prime().prime() == i.
    Index prime() const;
    bool is_primed() const;

    friend bool operator==(const Index &a, const Index &b) { return a.uid == b.uid; }
    friend bool operator!=(const Index &a, const Index &b) { return a.uid != b.uid; }
};

/// Fresh index with a process-unique uid.
Index make_index(int dim, std::string tag = {});

class Tensor {
public:
    Tensor();  // rank-0 tensor holding 1
    explicit Tensor(std::vector<Index> indices);  // zeros
    Tensor(std::vector<Index> indices, std::vector<cplx> data);

    static Tensor scalar(cplx value);

    const std::vector<Index> &indices() const { return indices_; }
    const Index &index(std::size_t k) const { return indices_[k]; }
    std::size_t rank() const { return indices_.size(); }
    std::size_t size() const { return data_.size(); }
    std::vector<int> dims() const;

    cplx *data() { return data_.data(); }
    const cplx *data() const { return data_.data(); }
    std::vector<cplx> &storage() { return data_; }
    const std::vector<cplx> &storage() const { return data_; }

    bool has_index(const Index &i) const;
    /// Position of i, or -1.
    int position(const Index &i) const;
    /// Look up an index by uid; throws if absent.
    const Index &find(const Index &i) const;

    /// Element access by per-index positions given in the order of indices().
    cplx &at(std::span<const int> pos);
    cplx at(std::span<const int> pos) const;

    /// Value of a rank-0 tensor.
    cplx scalar_value() const;

    Tensor &operator*=(cplx c);
    Tensor &operator+=(const Tensor &other);  // other is permuted to match

private:
    std::size_t offset(std::span<const int> pos) const;

    std::vector<Index> indices_;
    std::vector<cplx> data_;
};

/// Diagonal matrix between two legs of equal dimension. Values are
/// nonnegative and sorted descending when produced by svd_truncate.
struct DiagTensor {
    Index row;
    Index col;
    std::vector<double> values;
};

Tensor contract(const Tensor &a, const Tensor &b);
Tensor permute(const Tensor &t, std::span<const Index> order);
Tensor conj(const Tensor &t);
Tensor operator*(cplx c, const Tensor &t);
Tensor operator+(const Tensor &a, const Tensor &b);
Tensor operator-(const Tensor &a, const Tensor &b);

/// Rename a leg; dimensions must agree.
Tensor replace_index(Tensor t, const Index &from, const Index &to);
Tensor replace_indices(Tensor t, std::span<const Index> from, std::span<const Index> to);

/// Multiply entry-wise along one leg: t[..., k, ...] *= w[k].
void scale_leg(Tensor &t, const Index &leg, std::span<const double> w);

/// Frobenius norm.
double norm(const Tensor &t);

/// Identity between a leg and another leg of equal dimension.
Tensor delta(const Index &a, const Index &b);

/// Dense matrix with the given legs as rows (in the given order) and the
/// remaining legs as columns (in tensor order).
MatrixC to_matrix(const Tensor &t, std::span<const Index> row_legs);
Tensor from_matrix(const MatrixC &m, std::vector<Index> row_legs, std::vector<Index> col_legs);

/// Dense SVD, singular values descending. Divide and conquer with a Jacobi
/// fallback whenever the fast path returns non-finite factors.
struct DenseSvd {
    Eigen::MatrixXcd u;
    Eigen::VectorXd s;
    Eigen::MatrixXcd v;
};

DenseSvd dense_svd(const Eigen::MatrixXcd &m, bool full_factors = false);
Eigen::VectorXd singular_values(const Eigen::MatrixXcd &m);

struct SvdResult {
    Tensor u;  // row legs + left bond
    DiagTensor s;
    Tensor v;  // right bond + column legs
    double discarded_weight = 0.0;
};

/// Truncated SVD. Singular values below cutoff * sigma_max are dropped and at
/// most max_rank are kept (at least one always). discarded_weight is the
/// dropped fraction of sum(sigma^2).
SvdResult svd_truncate(const Tensor &t, std::span<const Index> row_legs, int max_rank,
                       double cutoff = 1e-14, const std::string &bond_tag = "svd");

struct QrResult {
    Tensor q;  // row legs + bond, isometric on the bond
    Tensor r;  // bond + column legs
};

QrResult qr(const Tensor &t, std::span<const Index> row_legs, const std::string &bond_tag = "qr");

/// Invert entries >= tol * max, zero the rest. Throws on an all-zero input.
DiagTensor pseudo_inverse(const DiagTensor &d, double tol);

}  // namespace bptns
