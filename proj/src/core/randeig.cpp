#include "pdeinv/randeig.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "pdeinv/error.hpp"
#include "pdeinv/fem/io.hpp"
#include "pdeinv/random.hpp"

namespace pdeinv {

PreCholQrResult pre_chol_qr(const DenseMatrix& y, const LinearOp& b_apply) {
    QrFactors zr = dense_qr(y);
    const DenseMatrix zbar = b_apply.apply_columns(zr.q);
    DenseMatrix g = transpose_times(zr.q, zbar);
    for (std::size_t j = 0; j < g.cols(); ++j)
        for (std::size_t i = 0; i < j; ++i) g(i, j) = g(j, i) = 0.5 * (g(i, j) + g(j, i));
    DenseMatrix l;
    try {
        l = dense_cholesky(g);
    } catch (const NotPositiveDefinite& e) {
        throw RankDeficient(e.index(), "pre_chol_qr: Z^T B Z is singular at column " + std::to_string(e.index()));
    }
    const DenseMatrix rz = l.transpose();
    const DenseMatrix rz_inv = upper_triangular_inverse(rz);
    return {zr.q * rz_inv, zbar * rz_inv, rz * zr.r};
}

DenseMatrix sketch_matrix(std::size_t n, std::size_t cols, std::uint64_t seed) {
    return gaussian_matrix(n, cols, seed);
}

namespace {

enum class Variant { double_pass, single_pass, saibaba };

void check_sizes(const LinearOp& a, const LinearOp& b, const LinearOp& binv, std::size_t k, std::size_t r) {
    const std::size_t n = a.size();
    if (b.size() != n || binv.size() != n) throw InvalidArgument("GHEP: operator sizes differ");
    if (r < 1) throw InvalidArgument("GHEP: r must be at least 1");
    if (k < r) throw InvalidArgument("GHEP: sketch has fewer columns than requested modes");
    if (k > n)
        throw InvalidArgument("GHEP: r + l = " + std::to_string(k) + " exceeds the dimension " + std::to_string(n));
}

// Basis of range(Y). Columns that are numerically dependent (exactly
// low-rank operators) are swapped for fixed random directions so that the
// basis keeps r + l columns; no extra operator applications are needed.
PreCholQrResult robust_basis(DenseMatrix y, const LinearOp& b, std::size_t& replaced) {
    double scale = 0.0;
    for (std::size_t j = 0; j < y.cols(); ++j) scale = std::max(scale, norm2(y.col(j)));
    if (scale == 0.0) scale = 1.0;
    for (std::size_t attempt = 0; attempt <= y.cols(); ++attempt) {
        try {
            return pre_chol_qr(y, b);
        } catch (const RankDeficient& e) {
            RandomStream rng(derive_seed(0xB451'5EEDULL, attempt));
            auto col = y.col(e.column());
            for (auto& v : col) v = rng.normal();
            pdeinv::scale(scale / norm2(col), col);
            ++replaced;
        }
    }
    throw RankDeficient(0, "GHEP: could not build a B-orthonormal basis");
}

GhepResult finish(DenseMatrix t, const DenseMatrix& q, std::size_t r) {
    for (std::size_t j = 0; j < t.cols(); ++j)
        for (std::size_t i = 0; i < j; ++i) t(i, j) = t(j, i) = 0.5 * (t(i, j) + t(j, i));
    EigenDecomposition e = dense_eigh(t);
    GhepResult res;
    res.lambda.assign(e.values.begin(), e.values.begin() + static_cast<std::ptrdiff_t>(r));
    res.v = q * e.vectors.leading_columns(r);
    return res;
}

GhepResult solve(Variant variant, const LinearOp& a_in, const LinearOp& b_in, const LinearOp& binv_in,
                 const DenseMatrix& omega, std::size_t r, unsigned threads) {
    check_sizes(a_in, b_in, binv_in, omega.cols(), r);
    if (omega.rows() != a_in.size()) throw InvalidArgument("GHEP: test matrix has the wrong number of rows");
    ApplyCounter ca = make_counter(), cb = make_counter(), cs = make_counter();
    const LinearOp a = counted(a_in, ca), b = counted(b_in, cb), binv = counted(binv_in, cs);

    const DenseMatrix ybar = a.apply_columns(omega, threads);
    const DenseMatrix y = binv.apply_columns(ybar, threads);
    std::size_t replaced = 0;
    const PreCholQrResult basis = robust_basis(y, b, replaced);

    DenseMatrix t;
    bool ls_deficient = false;
    switch (variant) {
        case Variant::double_pass: {
            const DenseMatrix aq = a.apply_columns(basis.q, threads);
            t = transpose_times(basis.q, aq);
            break;
        }
        case Variant::single_pass: {
            const SymmetricLsResult ls =
                symmetric_ls_solve(transpose_times(basis.qbar, omega), transpose_times(basis.qbar, y));
            t = ls.x;
            ls_deficient = ls.rank_deficient;
            break;
        }
        case Variant::saibaba: {
            std::size_t rank = 0;
            const DenseMatrix ginv = pseudo_inverse(transpose_times(basis.qbar, omega), 1e-12, &rank);
            ls_deficient = rank < omega.cols();
            t = transpose_times(ginv, transpose_times(omega, ybar) * ginv);
            break;
        }
    }
    GhepResult res = finish(std::move(t), basis.q, r);
    res.a_applies = ca->load();
    res.b_applies = cb->load();
    res.b_solves = cs->load();
    res.replaced_columns = replaced;
    res.rank_deficient_ls = ls_deficient;
    return res;
}

DenseMatrix omega_for(const LinearOp& a, const GhepConfig& cfg) {
    return sketch_matrix(a.size(), cfg.r + cfg.l, cfg.seed);
}

}  // namespace

GhepResult double_pass(const LinearOp& a, const LinearOp& b, const LinearOp& binv, const GhepConfig& cfg) {
    check_sizes(a, b, binv, cfg.r + cfg.l, cfg.r);
    return solve(Variant::double_pass, a, b, binv, omega_for(a, cfg), cfg.r, cfg.threads);
}

GhepResult double_pass(const LinearOp& a, const LinearOp& b, const LinearOp& binv, const DenseMatrix& omega,
                       std::size_t r, unsigned threads) {
    return solve(Variant::double_pass, a, b, binv, omega, r, threads);
}

GhepResult single_pass(const LinearOp& a, const LinearOp& b, const LinearOp& binv, const GhepConfig& cfg) {
    check_sizes(a, b, binv, cfg.r + cfg.l, cfg.r);
    return solve(Variant::single_pass, a, b, binv, omega_for(a, cfg), cfg.r, cfg.threads);
}

GhepResult single_pass(const LinearOp& a, const LinearOp& b, const LinearOp& binv, const DenseMatrix& omega,
                       std::size_t r, unsigned threads) {
    return solve(Variant::single_pass, a, b, binv, omega, r, threads);
}

GhepResult single_pass_saibaba(const LinearOp& a, const LinearOp& b, const LinearOp& binv, const GhepConfig& cfg) {
    check_sizes(a, b, binv, cfg.r + cfg.l, cfg.r);
    return solve(Variant::saibaba, a, b, binv, omega_for(a, cfg), cfg.r, cfg.threads);
}

GhepResult single_pass_saibaba(const LinearOp& a, const LinearOp& b, const LinearOp& binv, const DenseMatrix& omega,
                               std::size_t r, unsigned threads) {
    return solve(Variant::saibaba, a, b, binv, omega, r, threads);
}

void write_eigenvalues_csv(const std::filesystem::path& path, std::span<const double> lambda) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << "index,lambda\n";
    for (std::size_t i = 0; i < lambda.size(); ++i) out << i + 1 << ',' << format_double(lambda[i]) << '\n';
}

}  // namespace pdeinv
