#pragma once

#include <cstddef>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "thermoshift/common.hpp"

namespace thermoshift {

// Finite word over the positive-integer alphabet. The empty word is valid
// and acts as the identity for concatenation.
struct Word {
  std::vector<Symbol> symbols;

  Word() = default;
  Word(std::initializer_list<Symbol> s) : symbols(s) {}
  explicit Word(std::vector<Symbol> s) : symbols(std::move(s)) {}

  std::size_t size() const { return symbols.size(); }
  bool empty() const { return symbols.empty(); }
  Symbol operator[](std::size_t k) const { return symbols[k]; }
  Symbol first() const { return symbols.front(); }

  bool operator==(const Word& o) const { return symbols == o.symbols; }
  bool operator!=(const Word& o) const { return symbols != o.symbols; }

  // Drops the first k symbols (the shift acting on finite words).
  Word shifted(std::size_t k = 1) const {
    if (k >= symbols.size()) return Word{};
    return Word(std::vector<Symbol>(symbols.begin() + static_cast<std::ptrdiff_t>(k),
                                    symbols.end()));
  }

  Word prefix(std::size_t k) const {
    if (k >= symbols.size()) return *this;
    return Word(std::vector<Symbol>(symbols.begin(),
                                    symbols.begin() + static_cast<std::ptrdiff_t>(k)));
  }

  std::string str() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t k = 0; k < symbols.size(); ++k) {
      if (k) os << ',';
      os << symbols[k];
    }
    os << ')';
    return os.str();
  }
};

// Length-major, then lexicographic. Gives tables a deterministic,
// depth-grouped iteration order.
struct WordLess {
  bool operator()(const Word& a, const Word& b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    return a.symbols < b.symbols;
  }
};

inline Word concat(const Word& u, const Word& v) {
  Word r = u;
  r.symbols.insert(r.symbols.end(), v.symbols.begin(), v.symbols.end());
  return r;
}

// All symbols range over 1..N.
struct AlphabetCutoff {
  Symbol N = 1;
};

inline void check_enumeration_cap(Symbol N, std::size_t n, std::uint64_t cap) {
  const std::uint64_t count = pow_count(static_cast<std::uint64_t>(N),
                                        static_cast<std::uint32_t>(n), cap);
  if (count > cap) {
    throw CapExceededError("word enumeration: " + std::to_string(N) + "^" +
                           std::to_string(n) + " exceeds cap " + std::to_string(cap));
  }
}

// Visits every word of length n over {1..N} exactly once, in lexicographic
// order. The callback receives the word buffer; it must not retain it.
template <typename Fn>
void for_each_word(std::size_t n, Symbol N, Fn&& fn) {
  std::vector<Symbol> buf(n, 1);
  if (n == 0) {
    Word w;
    fn(w);
    return;
  }
  Word w;
  w.symbols = buf;
  for (;;) {
    fn(w);
    std::size_t k = n;
    while (k > 0 && w.symbols[k - 1] == N) {
      w.symbols[k - 1] = 1;
      --k;
    }
    if (k == 0) break;
    ++w.symbols[k - 1];
  }
}

inline std::vector<Word> enumerate_words(std::size_t n, AlphabetCutoff cut,
                                         std::uint64_t cap = word_cap_from_env()) {
  check_enumeration_cap(cut.N, n, cap);
  std::vector<Word> out;
  out.reserve(static_cast<std::size_t>(pow_count(static_cast<std::uint64_t>(cut.N),
                                                 static_cast<std::uint32_t>(n), cap)));
  for_each_word(n, cut.N, [&](const Word& w) { out.push_back(w); });
  return out;
}

// Words of length n starting with i; each stands for the periodic sequence
// obtained by repeating it.
inline std::vector<Word> periodic_words(Symbol i, std::size_t n, AlphabetCutoff cut,
                                        std::uint64_t cap = word_cap_from_env()) {
  if (n < 1) throw DomainError("periodic_words: n must be >= 1");
  if (i < 1 || i > cut.N) throw DomainError("periodic_words: symbol out of range");
  check_enumeration_cap(cut.N, n - 1, cap);
  std::vector<Word> out;
  for_each_word(n - 1, cut.N, [&](const Word& tail) {
    Word w;
    w.symbols.reserve(n);
    w.symbols.push_back(i);
    w.symbols.insert(w.symbols.end(), tail.symbols.begin(), tail.symbols.end());
    out.push_back(std::move(w));
  });
  return out;
}

// Lazy symbol stream (0-based index into an infinite sequence).
using SymbolStream = std::function<Symbol(std::size_t)>;

// The eventually-periodic stream (tau_1..tau_n)^inf.
inline SymbolStream periodize(const Word& tau, std::size_t n) {
  if (tau.size() < n || n == 0)
    throw DomainError("periodize: need |tau| >= n >= 1");
  std::vector<Symbol> base(tau.symbols.begin(),
                           tau.symbols.begin() + static_cast<std::ptrdiff_t>(n));
  return [base, n](std::size_t k) { return base[k % n]; };
}

// The stream rho_1..rho_n followed by the tail stream.
inline SymbolStream splice_preimage(const Word& rho, SymbolStream tail) {
  std::vector<Symbol> head = rho.symbols;
  return [head, tail = std::move(tail)](std::size_t k) {
    return k < head.size() ? head[k] : tail(k - head.size());
  };
}

inline SymbolStream shift_stream(SymbolStream s, std::size_t k) {
  return [s = std::move(s), k](std::size_t j) { return s(j + k); };
}

inline Word stream_prefix(const SymbolStream& s, std::size_t len) {
  Word w;
  w.symbols.reserve(len);
  for (std::size_t k = 0; k < len; ++k) w.symbols.push_back(s(k));
  return w;
}

}  // namespace thermoshift
