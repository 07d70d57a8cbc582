#pragma once

// Straight-line transcriptions of the six scheduler pseudocode listings for a
// two-subflow connection. Deliberately written without reusing library helpers.

#include <cstddef>

namespace ref {

struct Sf {
  double srtt;
  double rttvar;
  double cwnd;      // bytes
  double inflight;  // bytes
  double mss;
  bool available;
  bool backup;
  double gp;
};

struct Pair {
  Sf sf[2];
  double mptcp_sw;
  double k;  // remaining bytes
};

// -1 means NULL.
inline int minrtt(const Pair& v) {
  double srtt_min = 1e300;
  int best = -1;
  for (int i = 0; i < 2; ++i) {
    if (!v.sf[i].available || v.sf[i].backup) continue;
    if (v.sf[i].srtt < srtt_min) {
      srtt_min = v.sf[i].srtt;
      best = i;
    }
  }
  return best;
}

// Fast/slow split by srtt; ties favor subflow 0 as fast.
inline void fastSlow(const Pair& v, int& f, int& s) {
  if (v.sf[1].srtt < v.sf[0].srtt) {
    f = 1;
    s = 0;
  } else {
    f = 0;
    s = 1;
  }
}

inline int blest(const Pair& v, double lambda) {
  int f, s;
  fastSlow(v, f, s);
  if (v.sf[f].available) return f;
  if (v.sf[s].available) {
    double rtt_s = v.sf[s].srtt / v.sf[f].srtt;
    double cwnd_f_pkts = v.sf[f].cwnd / v.sf[f].mss;
    double inflight_s_pkts = v.sf[s].inflight / v.sf[s].mss;
    double X = v.sf[f].mss * (cwnd_f_pkts + (rtt_s - 1) / 2) * rtt_s;
    if (X * lambda <= v.mptcp_sw - v.sf[s].mss * (inflight_s_pkts + 1)) return s;
    return -1;
  }
  return -1;
}

inline int ecf(const Pair& v, int& waiting, double beta) {
  int f, s;
  fastSlow(v, f, s);
  if (v.sf[f].available) return f;
  if (!v.sf[s].available) return -1;
  double n = 1 + v.k / v.sf[f].cwnd;
  double delta = v.sf[f].rttvar > v.sf[s].rttvar ? v.sf[f].rttvar : v.sf[s].rttvar;
  if (n * v.sf[f].srtt < (1 + waiting * beta) * (v.sf[s].srtt + delta)) {
    if (v.k / v.sf[s].cwnd * v.sf[s].srtt >= 2 * v.sf[f].srtt + delta) {
      waiting = 1;
      return -1;
    }
    return s;
  }
  waiting = 0;
  return s;
}

// One grant of the round-robin loop resuming at `cursor`.
inline int rr(const Pair& v, int& cursor, int num_segments) {
  for (int step = 0; step < 2; ++step) {
    int i = (cursor + step) % 2;
    if (v.sf[i].cwnd - v.sf[i].inflight >= num_segments * v.sf[i].mss) {
      cursor = (i + 1) % 2;
      return i;
    }
  }
  return -1;
}

// Normalized by the current subflows' maxima.
inline int llhd(const Pair& v, double beta) {
  double gp_max = v.sf[0].gp > v.sf[1].gp ? v.sf[0].gp : v.sf[1].gp;
  double rtt_max = v.sf[0].srtt > v.sf[1].srtt ? v.sf[0].srtt : v.sf[1].srtt;
  int best = -1;
  double gamma_max = 0;
  for (int i = 0; i < 2; ++i) {
    if (v.sf[i].backup) continue;
    double gp_n = gp_max > 0 ? v.sf[i].gp / gp_max : 0.0;
    double gamma = gp_n + beta * (rtt_max / v.sf[i].srtt);
    if (v.sf[i].available && gamma > gamma_max) {
      gamma_max = gamma;
      best = i;
    }
  }
  if (best >= 0) return best;
  for (int i = 0; i < 2; ++i) {
    if (!v.sf[i].backup) continue;
    double gp_n = gp_max > 0 ? v.sf[i].gp / gp_max : 0.0;
    double gamma = gp_n + beta * (rtt_max / v.sf[i].srtt);
    if (v.sf[i].available && gamma > gamma_max) {
      gamma_max = gamma;
      best = i;
    }
  }
  return best;
}

inline void remp(const Pair& v, int& first, int& second) {
  first = -1;
  second = -1;
  for (int k = 0; k < 2; ++k)
    if (v.sf[k].available) {
      first = k;
      break;
    }
  for (int k = 0; k < 2; ++k)
    if (k != first && v.sf[k].available) {
      second = k;
      break;
    }
  if (first < 0) second = -1;
}

}  // namespace ref
