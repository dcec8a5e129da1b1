#include "bptns/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bptns {

namespace {

constexpr std::uint64_t kPrimeBit = std::uint64_t{1} << 62;
std::atomic<std::uint64_t> next_uid{1};

std::size_t product(const std::vector<Index> &inds) {
    std::size_t n = 1;
    for (const auto &i : inds) {
        n *= static_cast<std::size_t>(i.dim);
    }
    return n;
}

std::vector<std::size_t> strides_of(const std::vector<Index> &inds) {
    std::vector<std::size_t> s(inds.size(), 1);
    for (std::size_t k = inds.size(); k-- > 1;) {
        s[k - 1] = s[k] * static_cast<std::size_t>(inds[k].dim);
    }
    return s;
}

// out[k] = source axis of output axis k.
std::vector<cplx> transpose(const std::vector<cplx> &src, const std::vector<Index> &src_inds,
                            const std::vector<int> &perm) {
    const std::size_t r = perm.size();
    if (r == 0 || src.empty()) {
        return src;
    }
    std::vector<cplx> out(src.size());
    const auto sstr = strides_of(src_inds);
    std::vector<std::size_t> dims(r), str(r), dstr(r, 1);
    for (std::size_t k = 0; k < r; ++k) {
        dims[k] = static_cast<std::size_t>(src_inds[perm[k]].dim);
        str[k] = sstr[perm[k]];
    }
    for (std::size_t k = r - 1; k-- > 0;) {
        dstr[k] = dstr[k + 1] * dims[k + 1];
    }
    // Output axis that is contiguous in the source.
    std::size_t q = r;
    for (std::size_t k = 0; k + 1 < r; ++k) {
        if (str[k] == 1 && dims[k] > 1) {
            q = k;
        }
    }
    if (str[r - 1] == 1 || dims[r - 1] == 1 || q == r) {
        const std::size_t inner = dims[r - 1];
        const std::size_t inner_stride = str[r - 1];
        std::vector<std::size_t> ctr(r, 0);
        std::size_t src_off = 0;
        for (std::size_t dst = 0; dst < out.size(); dst += inner) {
            const cplx *sp = src.data() + src_off;
            for (std::size_t i = 0; i < inner; ++i) {
                out[dst + i] = sp[i * inner_stride];
            }
            for (std::size_t k = r - 1; k-- > 0;) {
                ++ctr[k];
                src_off += str[k];
                if (ctr[k] < dims[k]) {
                    break;
                }
                src_off -= str[k] * dims[k];
                ctr[k] = 0;
            }
        }
        return out;
    }
    // Tiled 2-D transpose between output axes q and r-1, looping over the rest.
    constexpr std::size_t tile = 16;
    const std::size_t nq = dims[q], nl = dims[r - 1], sl = str[r - 1], dq = dstr[q];
    std::vector<std::size_t> outer;
    for (std::size_t k = 0; k + 1 < r; ++k) {
        if (k != q) {
            outer.push_back(k);
        }
    }
    std::vector<std::size_t> ctr(outer.size(), 0);
    std::size_t src_off = 0, dst_off = 0;
    while (true) {
        for (std::size_t i0 = 0; i0 < nq; i0 += tile) {
            const std::size_t i1 = std::min(nq, i0 + tile);
            for (std::size_t j0 = 0; j0 < nl; j0 += tile) {
                const std::size_t j1 = std::min(nl, j0 + tile);
                for (std::size_t i = i0; i < i1; ++i) {
                    cplx *dp = out.data() + dst_off + i * dq;
                    const cplx *sp = src.data() + src_off + i;
                    for (std::size_t j = j0; j < j1; ++j) {
                        dp[j] = sp[j * sl];
                    }
                }
            }
        }
        std::size_t k = outer.size();
        while (k-- > 0) {
            const std::size_t ax = outer[k];
            ++ctr[k];
            src_off += str[ax];
            dst_off += dstr[ax];
            if (ctr[k] < dims[ax]) {
                break;
            }
            src_off -= str[ax] * dims[ax];
            dst_off -= dstr[ax] * dims[ax];
            ctr[k] = 0;
        }
        if (k == static_cast<std::size_t>(-1)) {
            break;
        }
    }
    return out;
}

bool is_identity(const std::vector<int> &perm) {
    for (std::size_t k = 0; k < perm.size(); ++k) {
        if (perm[k] != static_cast<int>(k)) {
            return false;
        }
    }
    return true;
}

using MapC = Eigen::Map<MatrixC>;
using CMapC = Eigen::Map<const MatrixC>;

}  // namespace

Index Index::prime() const {
    Index p = *this;
    p.uid ^= kPrimeBit;
    return p;
}

bool Index::is_primed() const { return (uid & kPrimeBit) != 0; }

Index make_index(int dim, std::string tag) {
    if (dim < 1) {
        throw std::invalid_argument("index dimension must be positive");
    }
    return Index{next_uid.fetch_add(1), dim, std::move(tag)};
}

Tensor::Tensor() : data_{cplx{1.0, 0.0}} {}

Tensor::Tensor(std::vector<Index> indices) : indices_(std::move(indices)) {
    for (std::size_t a = 0; a < indices_.size(); ++a) {
        for (std::size_t b = a + 1; b < indices_.size(); ++b) {
            if (indices_[a] == indices_[b]) {
                throw std::invalid_argument("repeated index in tensor: " + indices_[a].tag);
            }
        }
    }
    data_.assign(product(indices_), cplx{0.0, 0.0});
}

Tensor::Tensor(std::vector<Index> indices, std::vector<cplx> data) : Tensor(std::move(indices)) {
    if (data.size() != data_.size()) {
        throw std::invalid_argument("tensor data length does not match index dimensions");
    }
    data_ = std::move(data);
}

Tensor Tensor::scalar(cplx value) {
    Tensor t;
    t.data_[0] = value;
    return t;
}

std::vector<int> Tensor::dims() const {
    std::vector<int> d;
    d.reserve(indices_.size());
    for (const auto &i : indices_) {
        d.push_back(i.dim);
    }
    return d;
}

bool Tensor::has_index(const Index &i) const { return position(i) >= 0; }

int Tensor::position(const Index &i) const {
    for (std::size_t k = 0; k < indices_.size(); ++k) {
        if (indices_[k] == i) {
            return static_cast<int>(k);
        }
    }
    return -1;
}

const Index &Tensor::find(const Index &i) const {
    int p = position(i);
    if (p < 0) {
        throw std::invalid_argument("index not present in tensor: " + i.tag);
    }
    return indices_[p];
}

std::size_t Tensor::offset(std::span<const int> pos) const {
    if (pos.size() != indices_.size()) {
        throw std::invalid_argument("wrong number of positions");
    }
    std::size_t off = 0;
    for (std::size_t k = 0; k < pos.size(); ++k) {
        if (pos[k] < 0 || pos[k] >= indices_[k].dim) {
            throw std::out_of_range("tensor position out of range");
        }
        off = off * static_cast<std::size_t>(indices_[k].dim) + static_cast<std::size_t>(pos[k]);
    }
    return off;
}

cplx &Tensor::at(std::span<const int> pos) { return data_[offset(pos)]; }
cplx Tensor::at(std::span<const int> pos) const { return data_[offset(pos)]; }

cplx Tensor::scalar_value() const {
    if (!indices_.empty()) {
        throw std::logic_error("scalar_value on a tensor with open legs");
    }
    return data_[0];
}

Tensor &Tensor::operator*=(cplx c) {
    for (auto &x : data_) {
        x *= c;
    }
    return *this;
}

Tensor &Tensor::operator+=(const Tensor &other) {
    Tensor o = permute(other, indices_);
    for (std::size_t k = 0; k < data_.size(); ++k) {
        data_[k] += o.data_[k];
    }
    return *this;
}

Tensor permute(const Tensor &t, std::span<const Index> order) {
    if (order.size() != t.rank()) {
        throw std::invalid_argument("permute: order must name every leg exactly once");
    }
    std::vector<int> perm(order.size());
    std::vector<Index> new_inds;
    new_inds.reserve(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        perm[k] = t.position(order[k]);
        if (perm[k] < 0) {
            throw std::invalid_argument("permute: unknown leg " + order[k].tag);
        }
        new_inds.push_back(t.index(perm[k]));
    }
    if (is_identity(perm)) {
        return t;
    }
    return Tensor(std::move(new_inds), transpose(t.storage(), t.indices(), perm));
}

namespace {

// Where the shared legs sit in a tensor's own order.
enum class Block { leading, trailing, scattered };

Block shared_block(const Tensor &t, const std::vector<Index> &shared) {
    const auto &inds = t.indices();
    const std::size_t ns = shared.size();
    if (std::equal(shared.begin(), shared.end(), inds.begin())) {
        return Block::leading;
    }
    if (std::equal(shared.begin(), shared.end(), inds.end() - static_cast<std::ptrdiff_t>(ns))) {
        return Block::trailing;
    }
    return Block::scattered;
}

}  // namespace

Tensor contract(const Tensor &a, const Tensor &b) {
    std::vector<Index> free_a, shared_a, shared_b, free_b;
    for (const auto &i : a.indices()) {
        int p = b.position(i);
        if (p >= 0) {
            if (b.index(p).dim != i.dim) {
                throw std::invalid_argument("contract: dimension mismatch on leg " + i.tag);
            }
            shared_a.push_back(i);
        } else {
            free_a.push_back(i);
        }
    }
    for (const auto &i : b.indices()) {
        if (a.has_index(i)) {
            shared_b.push_back(i);
        } else {
            free_b.push_back(i);
        }
    }
    // Permute at most what is needed to present both operands to GEMM.
    Block ba = shared_block(a, shared_a);
    Block bb = shared_block(b, shared_b);
    std::vector<Index> shared = shared_a;
    if (shared_a != shared_b) {
        if (bb != Block::scattered && ba == Block::scattered) {
            shared = shared_b;
        } else {
            bb = Block::scattered;
        }
    }
    Tensor pa, pb;
    const Tensor *ta = &a;
    const Tensor *tb = &b;
    if (ba == Block::scattered) {
        std::vector<Index> order = free_a;
        order.insert(order.end(), shared.begin(), shared.end());
        pa = permute(a, order);
        ta = &pa;
        ba = Block::trailing;
    }
    if (bb == Block::scattered) {
        std::vector<Index> order = shared;
        order.insert(order.end(), free_b.begin(), free_b.end());
        pb = permute(b, order);
        tb = &pb;
        bb = Block::leading;
    }
    const auto m = static_cast<Eigen::Index>(product(free_a));
    const auto k = static_cast<Eigen::Index>(product(shared));
    const auto n = static_cast<Eigen::Index>(product(free_b));

    std::vector<Index> out_inds = free_a;
    out_inds.insert(out_inds.end(), free_b.begin(), free_b.end());
    Tensor out(std::move(out_inds));
    MapC c(out.data(), m, n);
    const bool at = ba == Block::leading;
    const bool bt = bb == Block::trailing;
    if (!at && !bt) {
        c.noalias() = CMapC(ta->data(), m, k) * CMapC(tb->data(), k, n);
    } else if (!at) {
        c.noalias() = CMapC(ta->data(), m, k) * CMapC(tb->data(), n, k).transpose();
    } else if (!bt) {
        c.noalias() = CMapC(ta->data(), k, m).transpose() * CMapC(tb->data(), k, n);
    } else {
        c.noalias() = CMapC(ta->data(), k, m).transpose() * CMapC(tb->data(), n, k).transpose();
    }
    return out;
}

Tensor conj(const Tensor &t) {
    Tensor c = t;
    for (auto &x : c.storage()) {
        x = std::conj(x);
    }
    return c;
}

Tensor operator*(cplx c, const Tensor &t) {
    Tensor r = t;
    r *= c;
    return r;
}

Tensor operator+(const Tensor &a, const Tensor &b) {
    Tensor r = a;
    r += b;
    return r;
}

Tensor operator-(const Tensor &a, const Tensor &b) {
    Tensor r = a;
    r += cplx{-1.0, 0.0} * b;
    return r;
}

Tensor replace_index(Tensor t, const Index &from, const Index &to) {
    int p = t.position(from);
    if (p < 0) {
        throw std::invalid_argument("replace_index: leg not found " + from.tag);
    }
    if (t.index(p).dim != to.dim) {
        throw std::invalid_argument("replace_index: dimension mismatch");
    }
    std::vector<Index> inds = t.indices();
    inds[p] = to;
    return Tensor(std::move(inds), std::move(t.storage()));
}

Tensor replace_indices(Tensor t, std::span<const Index> from, std::span<const Index> to) {
    if (from.size() != to.size()) {
        throw std::invalid_argument("replace_indices: size mismatch");
    }
    std::vector<Index> inds = t.indices();
    for (std::size_t k = 0; k < from.size(); ++k) {
        int p = t.position(from[k]);
        if (p < 0) {
            throw std::invalid_argument("replace_indices: leg not found " + from[k].tag);
        }
        if (inds[p].dim != to[k].dim) {
            throw std::invalid_argument("replace_indices: dimension mismatch");
        }
        inds[p] = to[k];
    }
    return Tensor(std::move(inds), std::move(t.storage()));
}

void scale_leg(Tensor &t, const Index &leg, std::span<const double> w) {
    int p = t.position(leg);
    if (p < 0) {
        throw std::invalid_argument("scale_leg: leg not found " + leg.tag);
    }
    const auto d = static_cast<std::size_t>(t.index(p).dim);
    if (w.size() != d) {
        throw std::invalid_argument("scale_leg: weight length mismatch");
    }
    std::size_t inner = 1;
    for (std::size_t k = p + 1; k < t.rank(); ++k) {
        inner *= static_cast<std::size_t>(t.index(k).dim);
    }
    const std::size_t outer = t.size() / (inner * d);
    cplx *x = t.data();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t j = 0; j < d; ++j) {
            const double s = w[j];
            for (std::size_t i = 0; i < inner; ++i) {
                *x++ *= s;
            }
        }
    }
}

double norm(const Tensor &t) {
    double s = 0.0;
    for (const auto &x : t.storage()) {
        s += std::norm(x);
    }
    return std::sqrt(s);
}

Tensor delta(const Index &a, const Index &b) {
    if (a.dim != b.dim) {
        throw std::invalid_argument("delta: dimension mismatch");
    }
    Tensor t({a, b});
    for (int k = 0; k < a.dim; ++k) {
        t.data()[static_cast<std::size_t>(k) * a.dim + k] = 1.0;
    }
    return t;
}

MatrixC to_matrix(const Tensor &t, std::span<const Index> row_legs) {
    std::vector<Index> order(row_legs.begin(), row_legs.end());
    std::size_t rows = 1;
    for (const auto &i : row_legs) {
        rows *= static_cast<std::size_t>(t.find(i).dim);
    }
    for (const auto &i : t.indices()) {
        if (std::find(row_legs.begin(), row_legs.end(), i) == row_legs.end()) {
            order.push_back(i);
        }
    }
    const Tensor p = permute(t, order);
    const std::size_t cols = rows == 0 ? 0 : p.size() / rows;
    return CMapC(p.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

Tensor from_matrix(const MatrixC &m, std::vector<Index> row_legs, std::vector<Index> col_legs) {
    std::vector<Index> inds = std::move(row_legs);
    inds.insert(inds.end(), col_legs.begin(), col_legs.end());
    Tensor t(std::move(inds));
    if (static_cast<std::size_t>(m.size()) != t.size()) {
        throw std::invalid_argument("from_matrix: shape mismatch");
    }
    std::copy(m.data(), m.data() + m.size(), t.data());
    return t;
}

namespace {

std::pair<std::vector<Index>, std::vector<Index>> split_legs(const Tensor &t,
                                                             std::span<const Index> row_legs) {
    if (row_legs.empty() || row_legs.size() >= t.rank()) {
        throw std::invalid_argument("row legs must be a nonempty proper subset of the tensor legs");
    }
    std::vector<Index> rows, cols;
    for (const auto &i : row_legs) {
        rows.push_back(t.find(i));
    }
    for (const auto &i : t.indices()) {
        if (std::find(row_legs.begin(), row_legs.end(), i) == row_legs.end()) {
            cols.push_back(i);
        }
    }
    return {rows, cols};
}

}  // namespace

DenseSvd dense_svd(const Eigen::MatrixXcd &m, bool full_factors) {
    const unsigned opts = full_factors ? Eigen::ComputeFullU | Eigen::ComputeFullV : Eigen::ComputeThinU | Eigen::ComputeThinV;
    DenseSvd out;
    {
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(m, opts);
        out.u = svd.matrixU();
        out.s = svd.singularValues();
        out.v = svd.matrixV();
    }
    if (out.u.allFinite() && out.s.allFinite() && out.v.allFinite()) {
        return out;
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, opts);
    out.u = svd.matrixU();
    out.s = svd.singularValues();
    out.v = svd.matrixV();
    if (!(out.u.allFinite() && out.s.allFinite() && out.v.allFinite())) {
        throw std::domain_error("svd: non-finite result");
    }
    return out;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXcd &m) {
    Eigen::VectorXd s = Eigen::BDCSVD<Eigen::MatrixXcd>(m).singularValues();
    if (!s.allFinite()) {
        s = Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues();
    }
    return s;
}

SvdResult svd_truncate(const Tensor &t, std::span<const Index> row_legs, int max_rank, double cutoff,
                       const std::string &bond_tag) {
    auto [rows, cols] = split_legs(t, row_legs);
    if (max_rank < 1) {
        throw std::invalid_argument("svd_truncate: max_rank must be >= 1");
    }
    const MatrixC m = to_matrix(t, rows);
    const DenseSvd svd = dense_svd(m);
    const Eigen::VectorXd &sv = svd.s;
    const Eigen::Index full = sv.size();

    double total = 0.0;
    for (Eigen::Index k = 0; k < full; ++k) {
        total += sv[k] * sv[k];
    }
    const double smax = full > 0 ? sv[0] : 0.0;
    Eigen::Index keep = 0;
    while (keep < full && keep < max_rank && sv[keep] > cutoff * smax && sv[keep] > 0.0) {
        ++keep;
    }
    keep = std::max<Eigen::Index>(keep, 1);
    double dropped = 0.0;
    for (Eigen::Index k = keep; k < full; ++k) {
        dropped += sv[k] * sv[k];
    }

    SvdResult r;
    Index lb = make_index(static_cast<int>(keep), bond_tag + ":l");
    Index rb = make_index(static_cast<int>(keep), bond_tag + ":r");
    MatrixC u = svd.u.leftCols(keep);
    MatrixC v = svd.v.leftCols(keep).adjoint();
    r.u = from_matrix(u, rows, {lb});
    r.v = from_matrix(v, {rb}, cols);
    r.s.row = lb;
    r.s.col = rb;
    r.s.values.assign(sv.data(), sv.data() + keep);
    r.discarded_weight = total > 0.0 ? dropped / total : 0.0;
    return r;
}

QrResult qr(const Tensor &t, std::span<const Index> row_legs, const std::string &bond_tag) {
    auto [rows, cols] = split_legs(t, row_legs);
    const MatrixC m = to_matrix(t, rows);
    const Eigen::Index k = std::min(m.rows(), m.cols());
    Eigen::HouseholderQR<Eigen::MatrixXcd> dec(m);
    MatrixC q = dec.householderQ() * Eigen::MatrixXcd::Identity(m.rows(), k);
    MatrixC r = dec.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    Index b = make_index(static_cast<int>(k), bond_tag);
    return {from_matrix(q, rows, {b}), from_matrix(r, {b}, cols)};
}

DiagTensor pseudo_inverse(const DiagTensor &d, double tol) {
    if (!(tol > 0.0)) {
        throw std::invalid_argument("pseudo_inverse: tol must be positive");
    }
    double mx = 0.0;
    for (double x : d.values) {
        mx = std::max(mx, std::abs(x));
    }
    if (mx == 0.0) {
        throw std::domain_error("pseudo_inverse of an all-zero diagonal");
    }
    DiagTensor out = d;
    for (double &x : out.values) {
        x = std::abs(x) >= tol * mx ? 1.0 / x : 0.0;
    }
    return out;
}

}  // namespace bptns
