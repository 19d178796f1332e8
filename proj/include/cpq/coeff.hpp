#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpq {

using Rat = mpq_class;

Rat parse_rat(const std::string& s);
std::string to_string(const Rat& r);
inline bool is_zero(const Rat& r) { return sgn(r) == 0; }

// Laurent polynomial in q: coefficient c[i] belongs to q^(lo+i).
// Stored trimmed: no zero coefficients at either end, zero polynomial has c empty.
class Laurent {
public:
    Laurent() = default;
    Laurent(const Rat& c, int exp = 0);
    static Laurent monomial(int exp) { return Laurent(Rat(1), exp); }

    bool is_zero() const { return c_.empty(); }
    int lo() const { return lo_; }
    int hi() const { return lo_ + int(c_.size()) - 1; }
    const Rat& coeff_at_index(std::size_t i) const { return c_[i]; }
    Rat coeff(int exp) const;
    std::size_t size() const { return c_.size(); }
    const Rat& lead() const { return c_.back(); }
    bool is_monomial() const { return c_.size() == 1; }

    Laurent operator-() const;
    friend Laurent operator+(const Laurent& a, const Laurent& b);
    friend Laurent operator-(const Laurent& a, const Laurent& b);
    friend Laurent operator*(const Laurent& a, const Laurent& b);
    Laurent scaled(const Rat& r) const;
    Laurent shifted(int k) const;
    friend bool operator==(const Laurent& a, const Laurent& b) { return a.lo_ == b.lo_ && a.c_ == b.c_; }

    Rat eval(const Rat& q0) const;
    std::string str() const;

    // ordinary-polynomial helpers (exponents taken relative to lo)
    static Laurent poly_gcd(Laurent a, Laurent b);
    static void poly_divmod(const Laurent& a, const Laurent& b, Laurent& quot, Laurent& rem);

private:
    int lo_ = 0;
    std::vector<Rat> c_;
    void trim();
    friend class QScalar;
};

// Element of Q(q) in canonical form: den monic, den has nonzero constant term,
// gcd(num, den) = 1 after clearing powers of q.
class QScalar {
public:
    QScalar() = default;
    QScalar(long v) : num_(Rat(v)), den_(Rat(1)) {}
    QScalar(const Rat& v) : num_(v), den_(Rat(1)) {}
    QScalar(const Laurent& n) : num_(n), den_(Rat(1)) {}
    QScalar(const Laurent& n, const Laurent& d);

    static QScalar q() { return QScalar(Laurent::monomial(1)); }
    static QScalar qpow(int k) { return QScalar(Laurent::monomial(k)); }

    const Laurent& num() const { return num_; }
    const Laurent& den() const { return den_; }
    bool is_zero() const { return num_.is_zero(); }
    bool is_laurent() const { return den_.is_monomial(); }

    QScalar operator-() const;
    QScalar& operator+=(const QScalar& b) { return *this = *this + b; }
    QScalar& operator-=(const QScalar& b) { return *this = *this - b; }
    QScalar& operator*=(const QScalar& b) { return *this = *this * b; }
    QScalar& operator/=(const QScalar& b) { return *this = *this / b; }
    friend QScalar operator+(const QScalar& a, const QScalar& b);
    friend QScalar operator-(const QScalar& a, const QScalar& b);
    friend QScalar operator*(const QScalar& a, const QScalar& b);
    friend QScalar operator/(const QScalar& a, const QScalar& b);
    friend bool operator==(const QScalar& a, const QScalar& b) { return a.num_ == b.num_ && a.den_ == b.den_; }

    Rat eval(const Rat& q0) const;
    std::string str() const;
    static QScalar parse(const std::string& s);
    std::size_t hash() const;

private:
    Laurent num_;
    Laurent den_{Rat(1)};
    void canonicalize();
};

inline bool is_zero(const QScalar& a) { return a.is_zero(); }
inline std::string to_string(const QScalar& a) { return a.str(); }

enum class Mode { Symbolic, Sampled };

// Arithmetic context: the field type plus the value of q inside it.
template <class S>
struct Field;

template <>
struct Field<Rat> {
    Rat q;
    explicit Field(Rat q0);
    Rat qpow(int k) const;
    std::string name() const { return "sampled q=" + to_string(q); }
};

template <>
struct Field<QScalar> {
    QScalar q = QScalar::q();
    QScalar qpow(int k) const { return QScalar::qpow(k); }
    std::string name() const { return "symbolic"; }
};

// Sampled q values exclude 0 and the roots of unity 1, -1.
void check_sample(const Rat& q0);

inline Rat lift_value(const QScalar& v, const Field<Rat>& f) { return v.eval(f.q); }
inline QScalar lift_value(const QScalar& v, const Field<QScalar>&) { return v; }

} // namespace cpq
