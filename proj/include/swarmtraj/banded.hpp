#pragma once

#include <Eigen/Dense>

#include <vector>

namespace swarmtraj
{

// Square band matrix with LU factorization under partial pivoting. Storage follows
// the LAPACK general-band layout so that row interchanges fit inside the band.
class BandedMatrix
{
public:
    BandedMatrix() = default;
    BandedMatrix(int n, int lower, int upper);

    int size() const { return n_; }
    double &operator()(int i, int j) { return ab_(kv_ + i - j, j); }
    double operator()(int i, int j) const { return ab_(kv_ + i - j, j); }

    // Returns false when a zero pivot is met.
    bool factorize();
    // In-place solves with the factorization; each column of b is one right-hand side.
    void solve(Eigen::MatrixXd &b) const;
    void solveTransposed(Eigen::MatrixXd &b) const;

private:
    int n_ = 0;
    int kl_ = 0;
    int ku_ = 0;
    int kv_ = 0;
    Eigen::MatrixXd ab_;
    std::vector<int> pivots_;
};

} // namespace swarmtraj
