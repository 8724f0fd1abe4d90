#include "swarmtraj/banded.hpp"

#include <algorithm>
#include <cmath>

namespace swarmtraj
{

BandedMatrix::BandedMatrix(int n, int lower, int upper)
    : n_(n), kl_(lower), ku_(upper), kv_(lower + upper), ab_(Eigen::MatrixXd::Zero(2 * lower + upper + 1, n)),
      pivots_(static_cast<std::size_t>(n), 0)
{
}

bool BandedMatrix::factorize()
{
    int ju = 0;
    for (int j = 0; j < n_; j++)
    {
        const int km = std::min(kl_, n_ - 1 - j);
        int jp = 0;
        double big = std::abs(ab_(kv_, j));
        for (int r = 1; r <= km; r++)
        {
            if (std::abs(ab_(kv_ + r, j)) > big)
            {
                big = std::abs(ab_(kv_ + r, j));
                jp = r;
            }
        }
        pivots_[static_cast<std::size_t>(j)] = j + jp;
        if (big == 0.0)
        {
            return false;
        }
        ju = std::max(ju, std::min(j + ku_ + jp, n_ - 1));
        if (jp != 0)
        {
            for (int c = j; c <= ju; c++)
            {
                std::swap(ab_(kv_ + j - c, c), ab_(kv_ + j + jp - c, c));
            }
        }
        if (km > 0)
        {
            const double inv = 1.0 / ab_(kv_, j);
            for (int r = 1; r <= km; r++)
            {
                ab_(kv_ + r, j) *= inv;
            }
            for (int c = j + 1; c <= ju; c++)
            {
                const double u = ab_(kv_ + j - c, c);
                if (u != 0.0)
                {
                    for (int r = 1; r <= km; r++)
                    {
                        ab_(kv_ + j + r - c, c) -= ab_(kv_ + r, j) * u;
                    }
                }
            }
        }
    }
    return true;
}

void BandedMatrix::solve(Eigen::MatrixXd &b) const
{
    for (int j = 0; j < n_ - 1; j++)
    {
        const int km = std::min(kl_, n_ - 1 - j);
        const int p = pivots_[static_cast<std::size_t>(j)];
        if (p != j)
        {
            b.row(j).swap(b.row(p));
        }
        for (int r = 1; r <= km; r++)
        {
            b.row(j + r) -= ab_(kv_ + r, j) * b.row(j);
        }
    }
    for (int j = n_ - 1; j >= 0; j--)
    {
        b.row(j) /= ab_(kv_, j);
        for (int i = std::max(0, j - kv_); i < j; i++)
        {
            b.row(i) -= ab_(kv_ + i - j, j) * b.row(j);
        }
    }
}

void BandedMatrix::solveTransposed(Eigen::MatrixXd &b) const
{
    for (int j = 0; j < n_; j++)
    {
        for (int i = std::max(0, j - kv_); i < j; i++)
        {
            b.row(j) -= ab_(kv_ + i - j, j) * b.row(i);
        }
        b.row(j) /= ab_(kv_, j);
    }
    for (int j = n_ - 2; j >= 0; j--)
    {
        const int km = std::min(kl_, n_ - 1 - j);
        for (int r = 1; r <= km; r++)
        {
            b.row(j) -= ab_(kv_ + r, j) * b.row(j + r);
        }
        const int p = pivots_[static_cast<std::size_t>(j)];
        if (p != j)
        {
            b.row(j).swap(b.row(p));
        }
    }
}

} // namespace swarmtraj
