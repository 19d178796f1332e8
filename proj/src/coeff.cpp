#include "cpq/coeff.hpp"

#include <cctype>
#include <sstream>

namespace cpq {

Rat parse_rat(const std::string& s)
{
    Rat r;
    if (r.set_str(s, 10) != 0)
        throw std::invalid_argument("bad rational: " + s);
    r.canonicalize();
    if (r.get_den() == 0)
        throw std::invalid_argument("bad rational: " + s);
    return r;
}

std::string to_string(const Rat& r) { return r.get_str(); }

void check_sample(const Rat& q0)
{
    if (q0 == 0 || q0 == 1 || q0 == -1)
        throw std::domain_error("excluded parameter");
}

Field<Rat>::Field(Rat q0) : q(std::move(q0)) { check_sample(q); }

Rat Field<Rat>::qpow(int k) const
{
    Rat r = 1;
    Rat b = k >= 0 ? q : Rat(1 / q);
    for (int i = 0; i < std::abs(k); ++i)
        r *= b;
    return r;
}

// ---------------------------------------------------------------- Laurent

Laurent::Laurent(const Rat& c, int exp) : lo_(sgn(c) != 0 ? exp : 0)
{
    if (sgn(c) != 0)
        c_.push_back(c);
}

void Laurent::trim()
{
    std::size_t b = 0;
    while (b < c_.size() && sgn(c_[b]) == 0)
        ++b;
    if (b == c_.size()) {
        c_.clear();
        lo_ = 0;
        return;
    }
    std::size_t e = c_.size();
    while (sgn(c_[e - 1]) == 0)
        --e;
    if (b > 0 || e < c_.size()) {
        c_ = std::vector<Rat>(c_.begin() + b, c_.begin() + e);
        lo_ += int(b);
    }
}

Rat Laurent::coeff(int exp) const
{
    if (c_.empty() || exp < lo_ || exp > hi())
        return 0;
    return c_[exp - lo_];
}

Laurent Laurent::operator-() const
{
    Laurent r = *this;
    for (auto& x : r.c_)
        x = -x;
    return r;
}

Laurent operator+(const Laurent& a, const Laurent& b)
{
    if (a.is_zero())
        return b;
    if (b.is_zero())
        return a;
    Laurent r;
    r.lo_ = std::min(a.lo_, b.lo_);
    int hi = std::max(a.hi(), b.hi());
    r.c_.resize(hi - r.lo_ + 1);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
        r.c_[a.lo_ - r.lo_ + i] = a.c_[i];
    for (std::size_t i = 0; i < b.c_.size(); ++i)
        r.c_[b.lo_ - r.lo_ + i] += b.c_[i];
    r.trim();
    return r;
}

Laurent operator-(const Laurent& a, const Laurent& b) { return a + (-b); }

Laurent operator*(const Laurent& a, const Laurent& b)
{
    if (a.is_zero() || b.is_zero())
        return {};
    Laurent r;
    r.lo_ = a.lo_ + b.lo_;
    r.c_.resize(a.c_.size() + b.c_.size() - 1);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
        for (std::size_t j = 0; j < b.c_.size(); ++j)
            r.c_[i + j] += a.c_[i] * b.c_[j];
    r.trim();
    return r;
}

Laurent Laurent::scaled(const Rat& r) const
{
    if (sgn(r) == 0)
        return {};
    Laurent out = *this;
    for (auto& x : out.c_)
        x *= r;
    return out;
}

Laurent Laurent::shifted(int k) const
{
    Laurent out = *this;
    if (!out.c_.empty())
        out.lo_ += k;
    return out;
}

Rat Laurent::eval(const Rat& q0) const
{
    if (c_.empty())
        return 0;
    Rat acc = 0;
    for (std::size_t i = c_.size(); i-- > 0;)
        acc = acc * q0 + c_[i];
    if (lo_ != 0) {
        Rat p = 1;
        Rat b = lo_ > 0 ? q0 : Rat(1 / q0);
        for (int i = 0; i < std::abs(lo_); ++i)
            p *= b;
        acc *= p;
    }
    return acc;
}

static std::string exp_str(int e)
{
    if (e == 0)
        return "";
    if (e == 1)
        return "q";
    return "q^" + std::to_string(e);
}

std::string Laurent::str() const
{
    if (c_.empty())
        return "0";
    std::string s;
    for (int e = hi(); e >= lo_; --e) {
        const Rat& x = c_[e - lo_];
        if (sgn(x) == 0)
            continue;
        Rat ax = abs(x);
        if (s.empty())
            s += sgn(x) < 0 ? "-" : "";
        else
            s += sgn(x) < 0 ? " - " : " + ";
        std::string m = exp_str(e);
        if (m.empty())
            s += ax.get_str();
        else if (ax == 1)
            s += m;
        else
            s += ax.get_str() + "*" + m;
    }
    return s;
}

void Laurent::poly_divmod(const Laurent& a, const Laurent& b, Laurent& quot, Laurent& rem)
{
    // exponents of a and b are treated relative to their own lo
    std::vector<Rat> r(a.c_);
    const auto& d = b.c_;
    quot = Laurent();
    if (r.size() < d.size()) {
        rem = a.shifted(-a.lo_);
        return;
    }
    std::vector<Rat> qv(r.size() - d.size() + 1);
    Rat inv = 1 / d.back();
    for (std::size_t k = r.size(); k-- >= d.size();) {
        if (sgn(r[k]) != 0) {
            Rat f = r[k] * inv;
            qv[k - (d.size() - 1)] = f;
            for (std::size_t j = 0; j < d.size(); ++j)
                r[k - (d.size() - 1) + j] -= f * d[j];
        }
        if (k == d.size() - 1)
            break;
    }
    quot.c_ = std::move(qv);
    quot.lo_ = 0;
    quot.trim();
    rem.c_ = std::move(r);
    rem.lo_ = 0;
    rem.trim();
}

namespace {

using ZPoly = std::vector<mpz_class>;

void make_primitive(ZPoly& p)
{
    mpz_class g = 0;
    for (auto& c : p)
        if (c != 0)
            g = gcd(g, c);
    if (p.back() < 0)
        g = -g;
    if (g != 1)
        for (auto& c : p)
            mpz_divexact(c.get_mpz_t(), c.get_mpz_t(), g.get_mpz_t());
}

ZPoly primitive_part(const std::vector<Rat>& c)
{
    mpz_class l = 1;
    for (auto& x : c)
        l = lcm(l, mpz_class(x.get_den()));
    ZPoly p(c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
        p[i] = c[i].get_num() * (l / c[i].get_den());
    make_primitive(p);
    return p;
}

// pseudo-remainder of a by b, both primitive, deg a >= deg b
ZPoly prem(ZPoly a, const ZPoly& b)
{
    const mpz_class& lb = b.back();
    while (a.size() >= b.size()) {
        mpz_class la = a.back();
        std::size_t sh = a.size() - b.size();
        for (auto& c : a)
            c *= lb;
        for (std::size_t j = 0; j < b.size(); ++j)
            a[sh + j] -= la * b[j];
        while (!a.empty() && a.back() == 0)
            a.pop_back();
        if (a.empty())
            break;
    }
    return a;
}

} // namespace

// gcd over Q via the primitive remainder sequence over Z; result is monic
Laurent Laurent::poly_gcd(Laurent a, Laurent b)
{
    if (a.is_zero())
        return b.is_zero() ? b : b.shifted(-b.lo_).scaled(1 / b.lead());
    if (b.is_zero())
        return a.shifted(-a.lo_).scaled(1 / a.lead());
    if (a.size() == 1 || b.size() == 1)
        return Laurent(Rat(1));
    ZPoly x = primitive_part(a.c_), y = primitive_part(b.c_);
    if (x.size() < y.size())
        std::swap(x, y);
    while (y.size() > 1) {
        ZPoly r = prem(x, y);
        if (r.empty()) {
            x = std::move(y);
            y.clear();
            break;
        }
        make_primitive(r);
        x = std::move(y);
        y = std::move(r);
    }
    if (!y.empty())
        return Laurent(Rat(1)); // nonzero constant remainder
    Laurent g;
    g.c_.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        g.c_[i] = Rat(x[i], x.back());
        g.c_[i].canonicalize();
    }
    return g;
}

// ---------------------------------------------------------------- QScalar

QScalar::QScalar(const Laurent& n, const Laurent& d) : num_(n), den_(d)
{
    if (d.is_zero())
        throw std::domain_error("zero denominator");
    canonicalize();
}

void QScalar::canonicalize()
{
    if (num_.is_zero()) {
        den_ = Laurent(Rat(1));
        return;
    }
    int shift = num_.lo() - den_.lo();
    Laurent n = num_.shifted(-num_.lo());
    Laurent d = den_.shifted(-den_.lo());
    if (d.size() > 1) {
        Laurent g = Laurent::poly_gcd(n, d);
        if (g.size() > 1) {
            Laurent rr;
            Laurent nq, dq;
            Laurent::poly_divmod(n, g, nq, rr);
            Laurent::poly_divmod(d, g, dq, rr);
            n = nq;
            d = dq;
        }
    }
    Rat l = d.lead();
    if (l != 1) {
        Rat il = 1 / l;
        n = n.scaled(il);
        d = d.scaled(il);
    }
    num_ = n.shifted(shift);
    den_ = d;
}

QScalar QScalar::operator-() const
{
    QScalar r = *this;
    r.num_ = -r.num_;
    return r;
}

namespace {

// n / g for g | n, with g having lo 0 and nonzero constant term
Laurent exact_div(const Laurent& n, const Laurent& g)
{
    if (g.size() == 1)
        return n.scaled(1 / g.lead());
    Laurent q, r;
    Laurent::poly_divmod(n, g, q, r);
    return q.shifted(n.lo());
}

bool is_one(const Laurent& p) { return p.size() == 1 && p.lo() == 0 && p.lead() == 1; }

} // namespace

// Denominators are monic with nonzero constant term, so cross cancellation keeps
// results canonical without a gcd on the full products.
QScalar operator+(const QScalar& a, const QScalar& b)
{
    if (a.is_zero())
        return b;
    if (b.is_zero())
        return a;
    QScalar r;
    if (is_one(a.den_) && is_one(b.den_)) {
        r.num_ = a.num_ + b.num_;
        return r;
    }
    Laurent g = Laurent::poly_gcd(a.den_, b.den_);
    if (is_one(g)) {
        r.num_ = a.num_ * b.den_ + b.num_ * a.den_;
        r.den_ = a.den_ * b.den_;
        return r;
    }
    Laurent bd = exact_div(a.den_, g), dd = exact_div(b.den_, g);
    Laurent t = a.num_ * dd + b.num_ * bd;
    if (t.is_zero())
        return r;
    Laurent g2 = Laurent::poly_gcd(t.shifted(-t.lo()), g);
    r.num_ = exact_div(t, g2);
    r.den_ = bd * exact_div(b.den_, g2);
    return r;
}

QScalar operator-(const QScalar& a, const QScalar& b) { return a + (-b); }

QScalar operator*(const QScalar& a, const QScalar& b)
{
    if (a.is_zero() || b.is_zero())
        return {};
    QScalar r;
    if (is_one(a.den_) && is_one(b.den_)) {
        r.num_ = a.num_ * b.num_;
        return r;
    }
    Laurent g1 = Laurent::poly_gcd(a.num_, b.den_), g2 = Laurent::poly_gcd(b.num_, a.den_);
    r.num_ = exact_div(a.num_, g1) * exact_div(b.num_, g2);
    r.den_ = exact_div(a.den_, g2) * exact_div(b.den_, g1);
    return r;
}

QScalar operator/(const QScalar& a, const QScalar& b)
{
    if (b.is_zero())
        throw std::domain_error("zero denominator");
    if (a.is_zero())
        return {};
    QScalar r;
    r.num_ = a.num_ * b.den_;
    r.den_ = a.den_ * b.num_;
    r.canonicalize();
    return r;
}

Rat QScalar::eval(const Rat& q0) const
{
    check_sample(q0);
    Rat d = den_.eval(q0);
    if (sgn(d) == 0)
        throw std::domain_error("evaluation pole");
    return num_.eval(q0) / d;
}

std::string QScalar::str() const
{
    std::string n = num_.str();
    if (den_ == Laurent(Rat(1)))
        return n;
    auto wrap = [](const Laurent& p, const std::string& s) { return p.size() > 1 ? "(" + s + ")" : s; };
    return wrap(num_, n) + "/" + wrap(den_, den_.str());
}

std::size_t QScalar::hash() const
{
    std::size_t h = std::hash<std::string>{}(str());
    return h;
}

// Grammar: expr := term (('+'|'-') term)* ; term := factor (('*'|'/') factor)*
// factor := ['-'] atom ['^' int] ; atom := number | 'q' | '(' expr ')'
namespace {
struct Parser {
    const std::string& s;
    std::size_t p = 0;

    void ws()
    {
        while (p < s.size() && std::isspace(static_cast<unsigned char>(s[p])))
            ++p;
    }
    [[noreturn]] void fail() const { throw std::invalid_argument("cannot parse q-scalar: " + s); }

    QScalar expr()
    {
        ws();
        QScalar acc;
        bool neg = false;
        if (p < s.size() && (s[p] == '-' || s[p] == '+')) {
            neg = s[p] == '-';
            ++p;
        }
        acc = term();
        if (neg)
            acc = -acc;
        for (;;) {
            ws();
            if (p < s.size() && (s[p] == '+' || s[p] == '-')) {
                char op = s[p++];
                QScalar t = term();
                acc = op == '+' ? acc + t : acc - t;
            } else
                return acc;
        }
    }
    QScalar term()
    {
        QScalar acc = factor();
        for (;;) {
            ws();
            if (p < s.size() && (s[p] == '*' || s[p] == '/')) {
                char op = s[p++];
                QScalar f = factor();
                acc = op == '*' ? acc * f : acc / f;
            } else
                return acc;
        }
    }
    long integer()
    {
        ws();
        bool neg = false;
        if (p < s.size() && (s[p] == '-' || s[p] == '+'))
            neg = s[p++] == '-';
        std::size_t b = p;
        while (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p])))
            ++p;
        if (b == p)
            fail();
        long v = std::stol(s.substr(b, p - b));
        return neg ? -v : v;
    }
    QScalar factor()
    {
        ws();
        if (p < s.size() && s[p] == '-') {
            ++p;
            return -factor();
        }
        QScalar base;
        if (p < s.size() && s[p] == '(') {
            ++p;
            base = expr();
            ws();
            if (p >= s.size() || s[p] != ')')
                fail();
            ++p;
        } else if (p < s.size() && s[p] == 'q') {
            ++p;
            base = QScalar::q();
        } else if (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p]))) {
            std::size_t b = p;
            while (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p])))
                ++p;
            base = QScalar(Rat(mpz_class(s.substr(b, p - b))));
        } else
            fail();
        ws();
        if (p < s.size() && s[p] == '^') {
            ++p;
            long e = integer();
            QScalar r(1);
            QScalar b = e >= 0 ? base : QScalar(1) / base;
            for (long i = 0; i < std::labs(e); ++i)
                r = r * b;
            return r;
        }
        return base;
    }
};
} // namespace

QScalar QScalar::parse(const std::string& s)
{
    Parser ps{s};
    QScalar r = ps.expr();
    ps.ws();
    if (ps.p != s.size())
        ps.fail();
    return r;
}

} // namespace cpq
