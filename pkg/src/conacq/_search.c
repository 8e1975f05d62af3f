/* Native core of the anytime branch-and-bound search.
 *
 * This is a direct port of the pure-Python engine in solver.py (_Search)
 * and must keep identical semantics: forward checking over binary
 * relations, a Hall-style pigeonhole check on disequality cliques,
 * per-pair objective bounds tightened against current domains, and
 * exclusivity groups (pairs sharing a variable whose other endpoints are
 * mutually distinct can realize their equal-values bonus at most once).
 * The Python side treats this library as an optional accelerator and
 * falls back to the Python engine when it cannot be compiled.
 *
 * Relation kind encoding (shared with the ctypes wrapper):
 *   0 ==   1 !=   2 <   3 <=   4 >   5 >=   6 floordiv-bucket-!=
 */

#include <stdint.h>
#include <stdlib.h>
#include <string.h>
#include <time.h>

#define K_EQ 0
#define K_NEQ 1
#define K_LT 2
#define K_LEQ 3
#define K_GT 4
#define K_GEQ 5
#define K_FDNEQ 6

#define NEG_INF INT64_MIN

static inline int64_t floordiv(int64_t a, int64_t p) {
    int64_t q = a / p;
    if ((a % p) != 0 && ((a < 0) != (p < 0)))
        q--;
    return q;
}

static inline int rel_holds(int kind, int param, int a, int b) {
    switch (kind) {
    case K_EQ:
        return a == b;
    case K_NEQ:
        return a != b;
    case K_LT:
        return a < b;
    case K_LEQ:
        return a <= b;
    case K_GT:
        return a > b;
    case K_GEQ:
        return a >= b;
    case K_FDNEQ:
        return floordiv(a, param) != floordiv(b, param);
    default:
        return 0;
    }
}

static inline int violated_under(int kind, int sign, int same) {
    switch (kind) {
    case K_EQ:
        return sign != 0;
    case K_NEQ:
        return sign == 0;
    case K_LT:
        return sign >= 0;
    case K_GT:
        return sign <= 0;
    case K_LEQ:
        return sign > 0;
    case K_GEQ:
        return sign < 0;
    case K_FDNEQ:
        return same;
    default:
        return 0;
    }
}

/* xorshift64* for value-order shuffles */
static inline uint64_t rng_next(uint64_t *s) {
    uint64_t x = *s;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    *s = x;
    return x * 2685821657736338717ULL;
}

/* ---- growable trail ---------------------------------------------------- */

typedef struct {
    int tag; /* 0 dom, 1 ub, 2 dec */
    int idx; /* var for dom, pair for ub/dec */
    int64_t a, b, c; /* dom: old dsize in a; ub/dec: old ub, mv, ub_sat */
} TrailEntry;

typedef struct Search Search;

struct Search {
    int n;
    int decision_only;
    int first_feasible;

    /* domains: mutable copy, per-var offset and live size */
    int *domv;
    int *doff;
    int *dsize;

    int *val;      /* assigned value */
    char *has_val; /* assignment flag */

    /* hard-constraint adjacency, CSR */
    int *adj_off;
    int *adj_other;
    int *adj_kind;
    int *adj_param;
    char *adj_first;

    /* disequality cliques, CSR, plus per-var clique membership CSR */
    int n_cliques;
    int *cl_off;
    int *cl_mem;
    int *cv_off;
    int *cv_idx;
    int hall_enabled;
    int vmin;          /* global minimum domain value */
    int *val_stamp;    /* per-value generation stamps for the Hall check */
    int *cl_stamp;     /* per-clique stamps deduping checks in one assign */
    int stamp_gen;
    int cl_tick;

    /* candidate pairs */
    int n_pairs;
    int *p_i;
    int *p_j;
    int *p_coff;  /* candidate offsets, n_pairs+1 */
    int *pc_kind;
    int *pc_param;
    int64_t *pc_w;
    char *p_bucket; /* pair has a floordiv candidate */
    int64_t *p_ub;
    int64_t *p_mv;
    int64_t *p_ubsat;
    int64_t *p_d;
    char *p_decided;
    int64_t *p_exact;
    int64_t *p_nviol;
    int *p_group;

    /* pairs-of-variable CSR */
    int *po_off;
    int *po_idx;
    int *pair_count;

    /* exclusivity groups */
    int n_groups;
    int *g_off;
    int *g_mem;
    int64_t *g_contrib;
    int64_t correction;

    int64_t total_ub;
    int64_t realized;
    int64_t violated_cnt;
    int n_undecided;

    int64_t best_value;
    int have_best;
    int *best;
    int stop; /* found in decision/first-feasible mode */

    int has_deadline;
    struct timespec deadline;
    int timed_out;
    unsigned node_counter;

    TrailEntry *trail;
    int trail_len;
    int trail_cap;

    int *changed; /* scratch: vars whose domains shrank in one assign */
};

static int trail_push(Search *s, int tag, int idx, int64_t a, int64_t b, int64_t c) {
    if (s->trail_len == s->trail_cap) {
        s->trail_cap *= 2;
        TrailEntry *t = realloc(s->trail, (size_t)s->trail_cap * sizeof(TrailEntry));
        if (!t)
            return -1;
        s->trail = t;
    }
    TrailEntry *e = &s->trail[s->trail_len++];
    e->tag = tag;
    e->idx = idx;
    e->a = a;
    e->b = b;
    e->c = c;
    return 0;
}

/* ---- pair bounds -------------------------------------------------------- */

static void pair_eval(const Search *s, int p, int a, int b, int64_t *sum, int64_t *nv) {
    int64_t sm = 0, n = 0;
    for (int k = s->p_coff[p]; k < s->p_coff[p + 1]; k++) {
        if (!rel_holds(s->pc_kind[k], s->pc_param[k], a, b)) {
            sm += s->pc_w[k];
            n++;
        }
    }
    *sum = sm;
    *nv = n;
}

static const int PLAIN_OUT[3][2] = {{-1, 0}, {0, 1}, {1, 0}};
static const int BUCKET_OUT[5][2] = {{-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}};

static void pair_init_bounds(Search *s, int p) {
    const int(*out)[2] = s->p_bucket[p] ? BUCKET_OUT : PLAIN_OUT;
    int nout = s->p_bucket[p] ? 5 : 3;
    int64_t ub = NEG_INF, mv = NEG_INF, ubsat = NEG_INF;
    for (int o = 0; o < nout; o++) {
        int sign = out[o][0], same = out[o][1];
        int64_t sm = 0, nv = 0;
        for (int k = s->p_coff[p]; k < s->p_coff[p + 1]; k++) {
            if (violated_under(s->pc_kind[k], sign, same)) {
                sm += s->pc_w[k];
                nv++;
            }
        }
        if (sm > ub)
            ub = sm;
        if (nv && sm > mv)
            mv = sm;
        if (sign != 0 && sm > ubsat)
            ubsat = sm;
    }
    s->p_ub[p] = ub;
    s->p_mv[p] = mv;
    s->p_ubsat[p] = ubsat;
    s->p_d[p] = ub - ubsat;
}

static void pair_tighten(const Search *s, int p, int fixed_is_i, int v, int other,
                         int64_t *ub, int64_t *mv, int64_t *ubsat) {
    int64_t u_ = NEG_INF, m_ = NEG_INF, us_ = NEG_INF;
    const int *dom = s->domv + s->doff[other];
    int size = s->dsize[other];
    for (int k = 0; k < size; k++) {
        int u = dom[k];
        int a = fixed_is_i ? v : u;
        int b = fixed_is_i ? u : v;
        int64_t sm, nv;
        pair_eval(s, p, a, b, &sm, &nv);
        if (sm > u_)
            u_ = sm;
        if (nv && sm > m_)
            m_ = sm;
        if (u != v && sm > us_)
            us_ = sm;
    }
    if (us_ == NEG_INF)
        us_ = u_; /* only the equal-values outcome left; claim no slack */
    *ub = u_;
    *mv = m_;
    *ubsat = us_;
}

/* ---- exclusivity groups -------------------------------------------------- */

static void refresh_group(Search *s, int g) {
    int64_t S = 0, M = 0;
    for (int k = s->g_off[g]; k < s->g_off[g + 1]; k++) {
        int p = s->g_mem[k];
        if (!s->p_decided[p] && s->p_d[p] > 0) {
            S += s->p_d[p];
            if (s->p_d[p] > M)
                M = s->p_d[p];
        }
    }
    int64_t contrib = S - M;
    s->correction += contrib - s->g_contrib[g];
    s->g_contrib[g] = contrib;
}

static void set_bounds(Search *s, int p, int64_t ub, int64_t mv, int64_t ubsat) {
    s->total_ub += ub - s->p_ub[p];
    s->p_ub[p] = ub;
    s->p_mv[p] = mv;
    s->p_ubsat[p] = ubsat;
    int64_t d = ub - ubsat;
    if (d != s->p_d[p]) {
        s->p_d[p] = d;
        if (s->p_group[p] >= 0)
            refresh_group(s, s->p_group[p]);
    }
}

/* ---- search ------------------------------------------------------------- */

static void rollback(Search *s, int mark) {
    while (s->trail_len > mark) {
        TrailEntry *e = &s->trail[--s->trail_len];
        if (e->tag == 0) {
            s->dsize[e->idx] = (int)e->a;
        } else if (e->tag == 1) {
            set_bounds(s, e->idx, e->a, e->b, e->c);
        } else {
            int p = e->idx;
            s->realized -= s->p_exact[p];
            s->violated_cnt -= s->p_nviol[p];
            s->n_undecided++;
            s->total_ub += e->a;
            s->p_decided[p] = 0;
            s->p_ub[p] = e->a;
            s->p_mv[p] = e->b;
            s->p_ubsat[p] = e->c;
            s->p_d[p] = e->a - e->c;
            if (s->p_group[p] >= 0)
                refresh_group(s, s->p_group[p]);
        }
    }
}

/* returns trail mark on success, -1 on dead end */
static int assign_var(Search *s, int i, int v) {
    int mark = s->trail_len;
    s->val[i] = v;
    s->has_val[i] = 1;
    int n_changed = 0;
    for (int e = s->adj_off[i]; e < s->adj_off[i + 1]; e++) {
        int j = s->adj_other[e];
        if (s->has_val[j])
            continue;
        int kind = s->adj_kind[e], param = s->adj_param[e], first = s->adj_first[e];
        int *dom = s->domv + s->doff[j];
        int size = s->dsize[j];
        int k = 0;
        while (k < size) {
            int u = dom[k];
            int ok = first ? rel_holds(kind, param, v, u) : rel_holds(kind, param, u, v);
            if (ok) {
                k++;
            } else {
                size--;
                int tmp = dom[k];
                dom[k] = dom[size];
                dom[size] = tmp;
            }
        }
        if (size != s->dsize[j]) {
            trail_push(s, 0, j, s->dsize[j], 0, 0);
            s->dsize[j] = size;
            int seen = 0;
            for (int t = 0; t < n_changed; t++)
                if (s->changed[t] == j) {
                    seen = 1;
                    break;
                }
            if (!seen)
                s->changed[n_changed++] = j;
        }
        if (size == 0) {
            rollback(s, mark);
            s->has_val[i] = 0;
            return -1;
        }
    }
    /* pigeonhole check on disequality cliques touched by the prunes */
    if (s->hall_enabled) {
        s->cl_tick++;
        for (int t = 0; t < n_changed; t++) {
            int src = s->changed[t];
            for (int qx = s->cv_off[src]; qx < s->cv_off[src + 1]; qx++) {
                int q = s->cv_idx[qx];
                if (s->cl_stamp[q] == s->cl_tick)
                    continue;
                s->cl_stamp[q] = s->cl_tick;
                s->stamp_gen++;
                int m = 0, avail = 0;
                for (int mx = s->cl_off[q]; mx < s->cl_off[q + 1]; mx++) {
                    int mem = s->cl_mem[mx];
                    if (s->has_val[mem])
                        continue;
                    m++;
                    const int *dom = s->domv + s->doff[mem];
                    for (int k = 0; k < s->dsize[mem]; k++) {
                        int slot = dom[k] - s->vmin;
                        if (s->val_stamp[slot] != s->stamp_gen) {
                            s->val_stamp[slot] = s->stamp_gen;
                            avail++;
                        }
                    }
                }
                if (avail < m) {
                    rollback(s, mark);
                    s->has_val[i] = 0;
                    return -1;
                }
            }
        }
    }
    /* re-tighten half-assigned pairs whose open endpoint lost values */
    for (int t = 0; t < n_changed; t++) {
        int j = s->changed[t];
        for (int px = s->po_off[j]; px < s->po_off[j + 1]; px++) {
            int p = s->po_idx[px];
            if (s->p_decided[p])
                continue;
            int other = (s->p_i[p] == j) ? s->p_j[p] : s->p_i[p];
            if (!s->has_val[other] || other == i)
                continue; /* pairs touching i are tightened below */
            int64_t ub, mv, ubsat;
            pair_tighten(s, p, s->p_i[p] == other, s->val[other], j, &ub, &mv, &ubsat);
            if (ub != s->p_ub[p] || mv != s->p_mv[p] || ubsat != s->p_ubsat[p]) {
                trail_push(s, 1, p, s->p_ub[p], s->p_mv[p], s->p_ubsat[p]);
                set_bounds(s, p, ub, mv, ubsat);
            }
        }
    }
    /* candidate pairs touching the assigned variable */
    for (int px = s->po_off[i]; px < s->po_off[i + 1]; px++) {
        int p = s->po_idx[px];
        if (s->p_decided[p])
            continue;
        int other = (s->p_i[p] == i) ? s->p_j[p] : s->p_i[p];
        if (s->has_val[other]) {
            int64_t sm, nv;
            pair_eval(s, p, s->val[s->p_i[p]], s->val[s->p_j[p]], &sm, &nv);
            trail_push(s, 2, p, s->p_ub[p], s->p_mv[p], s->p_ubsat[p]);
            s->total_ub -= s->p_ub[p];
            s->realized += sm;
            s->violated_cnt += nv;
            s->n_undecided--;
            s->p_decided[p] = 1;
            s->p_exact[p] = sm;
            s->p_nviol[p] = nv;
            if (s->p_group[p] >= 0)
                refresh_group(s, s->p_group[p]);
        } else {
            int64_t ub, mv, ubsat;
            pair_tighten(s, p, s->p_i[p] == i, v, other, &ub, &mv, &ubsat);
            trail_push(s, 1, p, s->p_ub[p], s->p_mv[p], s->p_ubsat[p]);
            set_bounds(s, p, ub, mv, ubsat);
        }
    }
    return mark;
}

static int bound_allows(Search *s) {
    /* the exclusivity correction and the must-violate correction are each
     * sound alone but do not stack; take the better of the two bounds */
    int64_t bound = s->realized + s->total_ub - s->correction;
    if (s->violated_cnt == 0) {
        if (s->n_undecided == 0)
            return 0;
        int64_t corr = NEG_INF;
        for (int p = 0; p < s->n_pairs; p++) {
            if (!s->p_decided[p] && s->p_mv[p] > NEG_INF) {
                int64_t c = s->p_mv[p] - s->p_ub[p];
                if (c > corr) {
                    corr = c;
                    if (c == 0)
                        break;
                }
            }
        }
        if (corr == NEG_INF)
            return 0;
        int64_t alt = s->realized + s->total_ub + corr;
        if (alt < bound)
            bound = alt;
    }
    if (!s->have_best)
        return 1;
    return bound > s->best_value;
}

static int select_var(Search *s) {
    int best = -1;
    int b_active = 0, b_dsize = 0, b_pc = 0;
    for (int i = 0; i < s->n; i++) {
        if (s->has_val[i])
            continue;
        int active = 0;
        for (int px = s->po_off[i]; px < s->po_off[i + 1]; px++) {
            int p = s->po_idx[px];
            if (!s->p_decided[p] && s->p_ub[p] > 0) {
                active = 1;
                break;
            }
        }
        if (best < 0 || active > b_active ||
            (active == b_active &&
             (s->dsize[i] < b_dsize ||
              (s->dsize[i] == b_dsize && s->pair_count[i] > b_pc)))) {
            best = i;
            b_active = active;
            b_dsize = s->dsize[i];
            b_pc = s->pair_count[i];
        }
    }
    return best;
}

static void leaf(Search *s) {
    if (!s->decision_only && s->violated_cnt < 1)
        return;
    int64_t value = s->realized;
    if (s->decision_only || !s->have_best || value > s->best_value) {
        s->best_value = value;
        s->have_best = 1;
        memcpy(s->best, s->val, (size_t)s->n * sizeof(int));
        if (s->decision_only || s->first_feasible)
            s->stop = 1;
    }
}

static void dfs(Search *s, int depth) {
    if (s->has_deadline && (++s->node_counter & 63u) == 0) {
        struct timespec now;
        clock_gettime(CLOCK_MONOTONIC, &now);
        if (now.tv_sec > s->deadline.tv_sec ||
            (now.tv_sec == s->deadline.tv_sec && now.tv_nsec > s->deadline.tv_nsec)) {
            s->timed_out = 1;
            return;
        }
    }
    if (depth == s->n) {
        leaf(s);
        return;
    }
    int i = select_var(s);
    const int *dom = s->domv + s->doff[i];
    int size = s->dsize[i];
    for (int vi = 0; vi < size; vi++) {
        int v = dom[vi];
        int mark = assign_var(s, i, v);
        if (mark < 0)
            continue;
        if (s->decision_only || bound_allows(s))
            dfs(s, depth + 1);
        rollback(s, mark);
        s->has_val[i] = 0;
        if (s->timed_out || s->stop)
            return;
    }
}

/* ---- setup -------------------------------------------------------------- */

static const int SWAP_KIND[7] = {K_EQ, K_NEQ, K_GT, K_GEQ, K_LT, K_LEQ, K_FDNEQ};

/* Returns 0 on success; fills out_assign/out_value/out_flags.
 * out_flags: [0] found, [1] timed_out. */
int conacq_search(
    int n,
    const int32_t *dom_off, const int32_t *dom_val,
    int nh, const int32_t *h_a, const int32_t *h_b,
    const int32_t *h_kind, const int32_t *h_param,
    int nc, const int32_t *c_a, const int32_t *c_b,
    const int32_t *c_kind, const int32_t *c_param, const int64_t *c_w,
    int decision_only, int first_feasible,
    double deadline_s, uint64_t seed,
    int32_t *out_assign, int64_t *out_value, int32_t *out_flags) {
    Search S;
    memset(&S, 0, sizeof(S));
    Search *s = &S;
    s->n = n;
    s->decision_only = decision_only;
    s->first_feasible = first_feasible;
    s->best_value = NEG_INF;

    int total_dom = dom_off[n];
    s->domv = malloc((size_t)total_dom * sizeof(int));
    s->doff = malloc((size_t)(n + 1) * sizeof(int));
    s->dsize = malloc((size_t)n * sizeof(int));
    s->val = malloc((size_t)n * sizeof(int));
    s->has_val = calloc((size_t)n, 1);
    s->best = malloc((size_t)n * sizeof(int));
    s->changed = malloc((size_t)n * sizeof(int));
    for (int i = 0; i <= n; i++)
        s->doff[i] = dom_off[i];
    for (int k = 0; k < total_dom; k++)
        s->domv[k] = dom_val[k];
    uint64_t rng = seed ? seed : 0x9E3779B97F4A7C15ULL;
    int vmin = 0, vmax = 0;
    for (int i = 0; i < n; i++) {
        int sz = s->doff[i + 1] - s->doff[i];
        s->dsize[i] = sz;
        int *dom = s->domv + s->doff[i];
        for (int k = sz - 1; k > 0; k--) {
            int r = (int)(rng_next(&rng) % (uint64_t)(k + 1));
            int tmp = dom[k];
            dom[k] = dom[r];
            dom[r] = tmp;
        }
        for (int k = 0; k < sz; k++) {
            if (i == 0 && k == 0) {
                vmin = vmax = dom[k];
            } else {
                if (dom[k] < vmin)
                    vmin = dom[k];
                if (dom[k] > vmax)
                    vmax = dom[k];
            }
        }
    }

    /* hard adjacency CSR */
    s->adj_off = calloc((size_t)n + 2, sizeof(int));
    for (int e = 0; e < nh; e++) {
        s->adj_off[h_a[e] + 1]++;
        s->adj_off[h_b[e] + 1]++;
    }
    for (int i = 0; i < n; i++)
        s->adj_off[i + 1] += s->adj_off[i];
    s->adj_other = malloc((size_t)(2 * nh + 1) * sizeof(int));
    s->adj_kind = malloc((size_t)(2 * nh + 1) * sizeof(int));
    s->adj_param = malloc((size_t)(2 * nh + 1) * sizeof(int));
    s->adj_first = malloc((size_t)(2 * nh + 1));
    {
        int *fill = calloc((size_t)n, sizeof(int));
        for (int e = 0; e < nh; e++) {
            int a = h_a[e], b = h_b[e];
            int pa = s->adj_off[a] + fill[a]++;
            s->adj_other[pa] = b;
            s->adj_kind[pa] = h_kind[e];
            s->adj_param[pa] = h_param[e];
            s->adj_first[pa] = 1;
            int pb = s->adj_off[b] + fill[b]++;
            s->adj_other[pb] = a;
            s->adj_kind[pb] = h_kind[e];
            s->adj_param[pb] = h_param[e];
            s->adj_first[pb] = 0;
        }
        free(fill);
    }

    /* greedy disequality clique cover (same procedure as the Python
     * engine: each variable joins every existing clique it is fully
     * adjacent to, else seeds a new one; cliques under 3 are dropped) */
    char *neq = calloc((size_t)n * (size_t)n, 1);
    char *has_neq = calloc((size_t)n, 1);
    for (int e = 0; e < nh; e++) {
        if (h_kind[e] == K_NEQ) {
            neq[(size_t)h_a[e] * n + h_b[e]] = 1;
            neq[(size_t)h_b[e] * n + h_a[e]] = 1;
            has_neq[h_a[e]] = 1;
            has_neq[h_b[e]] = 1;
        }
    }
    int cap_cl = n + 1;
    int *cl_len = calloc((size_t)cap_cl, sizeof(int));
    int **cl_tmp = calloc((size_t)cap_cl, sizeof(int *));
    int ncl = 0;
    for (int i = 0; i < n; i++) {
        int placed = 0;
        for (int q = 0; q < ncl; q++) {
            int ok = 1;
            for (int k = 0; k < cl_len[q]; k++)
                if (!neq[(size_t)i * n + cl_tmp[q][k]]) {
                    ok = 0;
                    break;
                }
            if (ok) {
                cl_tmp[q] = realloc(cl_tmp[q], (size_t)(cl_len[q] + 1) * sizeof(int));
                cl_tmp[q][cl_len[q]++] = i;
                placed = 1;
            }
        }
        if (!placed && has_neq[i]) {
            cl_tmp[ncl] = malloc(sizeof(int));
            cl_tmp[ncl][0] = i;
            cl_len[ncl] = 1;
            ncl++;
        }
    }
    free(neq);
    free(has_neq);
    int kept = 0, memtot = 0;
    for (int q = 0; q < ncl; q++)
        if (cl_len[q] >= 3) {
            kept++;
            memtot += cl_len[q];
        }
    s->n_cliques = kept;
    s->cl_off = malloc((size_t)(kept + 1) * sizeof(int));
    s->cl_mem = malloc((size_t)(memtot + 1) * sizeof(int));
    s->cv_off = calloc((size_t)n + 2, sizeof(int));
    {
        int q2 = 0, pos = 0;
        s->cl_off[0] = 0;
        for (int q = 0; q < ncl; q++) {
            if (cl_len[q] < 3)
                continue;
            for (int k = 0; k < cl_len[q]; k++) {
                s->cl_mem[pos++] = cl_tmp[q][k];
                s->cv_off[cl_tmp[q][k] + 1]++;
            }
            s->cl_off[++q2] = pos;
        }
        for (int i = 0; i < n; i++)
            s->cv_off[i + 1] += s->cv_off[i];
        s->cv_idx = malloc((size_t)(memtot + 1) * sizeof(int));
        int *fill = calloc((size_t)n, sizeof(int));
        for (int q = 0; q < kept; q++)
            for (int k = s->cl_off[q]; k < s->cl_off[q + 1]; k++) {
                int v = s->cl_mem[k];
                s->cv_idx[s->cv_off[v] + fill[v]++] = q;
            }
        free(fill);
    }
    for (int q = 0; q < ncl; q++)
        free(cl_tmp[q]);
    free(cl_tmp);
    free(cl_len);
    s->vmin = vmin;
    long vr = (long)vmax - (long)vmin + 1;
    s->hall_enabled = s->n_cliques > 0 && vr > 0 && vr <= 1 << 20;
    if (s->hall_enabled) {
        s->val_stamp = calloc((size_t)vr, sizeof(int));
        s->cl_stamp = calloc((size_t)s->n_cliques, sizeof(int));
    }

    /* group candidates by unordered variable pair, preserving first-seen
     * pair order and in-pair candidate order */
    int *pairidx = malloc((size_t)n * (size_t)n * sizeof(int));
    for (size_t k = 0; k < (size_t)n * (size_t)n; k++)
        pairidx[k] = -1;
    int np = 0;
    for (int e = 0; e < nc; e++) {
        int a = c_a[e], b = c_b[e];
        int lo = a < b ? a : b, hi = a < b ? b : a;
        if (pairidx[(size_t)lo * n + hi] < 0)
            pairidx[(size_t)lo * n + hi] = np++;
    }
    s->n_pairs = np;
    s->p_i = malloc((size_t)(np + 1) * sizeof(int));
    s->p_j = malloc((size_t)(np + 1) * sizeof(int));
    s->p_coff = calloc((size_t)np + 2, sizeof(int));
    s->p_bucket = calloc((size_t)np + 1, 1);
    s->p_ub = malloc((size_t)(np + 1) * sizeof(int64_t));
    s->p_mv = malloc((size_t)(np + 1) * sizeof(int64_t));
    s->p_ubsat = malloc((size_t)(np + 1) * sizeof(int64_t));
    s->p_d = malloc((size_t)(np + 1) * sizeof(int64_t));
    s->p_decided = calloc((size_t)np + 1, 1);
    s->p_exact = calloc((size_t)np + 1, sizeof(int64_t));
    s->p_nviol = calloc((size_t)np + 1, sizeof(int64_t));
    s->p_group = malloc((size_t)(np + 1) * sizeof(int));
    for (int p = 0; p <= np; p++)
        s->p_group[p] = -1;
    for (int e = 0; e < nc; e++) {
        int a = c_a[e], b = c_b[e];
        int lo = a < b ? a : b, hi = a < b ? b : a;
        int p = pairidx[(size_t)lo * n + hi];
        s->p_i[p] = lo;
        s->p_j[p] = hi;
        s->p_coff[p + 1]++;
    }
    for (int p = 0; p < np; p++)
        s->p_coff[p + 1] += s->p_coff[p];
    s->pc_kind = malloc((size_t)(nc + 1) * sizeof(int));
    s->pc_param = malloc((size_t)(nc + 1) * sizeof(int));
    s->pc_w = malloc((size_t)(nc + 1) * sizeof(int64_t));
    {
        int *fill = calloc((size_t)np + 1, sizeof(int));
        for (int e = 0; e < nc; e++) {
            int a = c_a[e], b = c_b[e];
            int lo = a < b ? a : b, hi = a < b ? b : a;
            int p = pairidx[(size_t)lo * n + hi];
            int kind = c_kind[e];
            if (a > b)
                kind = SWAP_KIND[kind];
            int pos = s->p_coff[p] + fill[p]++;
            s->pc_kind[pos] = kind;
            s->pc_param[pos] = c_param[e];
            s->pc_w[pos] = c_w[e];
            if (kind == K_FDNEQ)
                s->p_bucket[p] = 1;
        }
        free(fill);
    }
    free(pairidx);

    /* pairs-of-variable CSR, pair order ascending (matches construction) */
    s->po_off = calloc((size_t)n + 2, sizeof(int));
    for (int p = 0; p < np; p++) {
        s->po_off[s->p_i[p] + 1]++;
        s->po_off[s->p_j[p] + 1]++;
    }
    for (int i = 0; i < n; i++)
        s->po_off[i + 1] += s->po_off[i];
    s->po_idx = malloc((size_t)(2 * np + 1) * sizeof(int));
    s->pair_count = calloc((size_t)n + 1, sizeof(int));
    {
        int *fill = calloc((size_t)n, sizeof(int));
        for (int p = 0; p < np; p++) {
            s->po_idx[s->po_off[s->p_i[p]] + fill[s->p_i[p]]++] = p;
            s->po_idx[s->po_off[s->p_j[p]] + fill[s->p_j[p]]++] = p;
        }
        free(fill);
        for (int i = 0; i < n; i++)
            s->pair_count[i] = s->po_off[i + 1] - s->po_off[i];
    }
    for (int p = 0; p < np; p++)
        pair_init_bounds(s, p);
    s->total_ub = 0;
    for (int p = 0; p < np; p++)
        s->total_ub += s->p_ub[p];
    s->n_undecided = np;

    /* exclusivity groups: anchors in descending pair-count order (ties by
     * index); per anchor, the other endpoints are covered greedily by the
     * disequality clique holding the most of them, so the bound admits as
     * few simultaneous equal-values outcomes as possible */
    s->correction = 0;
    s->n_groups = 0;
    int *grp_of = NULL;
    if (np > 0 && s->n_cliques > 0 && !decision_only && !first_feasible) {
        int *order = malloc((size_t)n * sizeof(int));
        for (int i = 0; i < n; i++)
            order[i] = i;
        /* insertion sort by descending pair_count, stable */
        for (int i = 1; i < n; i++) {
            int x = order[i], k = i;
            while (k > 0 && s->pair_count[order[k - 1]] < s->pair_count[x]) {
                order[k] = order[k - 1];
                k--;
            }
            order[k] = x;
        }
        char *in_cl = calloc((size_t)s->n_cliques * (size_t)n, 1);
        for (int q = 0; q < s->n_cliques; q++)
            for (int k = s->cl_off[q]; k < s->cl_off[q + 1]; k++)
                in_cl[(size_t)q * n + s->cl_mem[k]] = 1;
        grp_of = malloc((size_t)np * sizeof(int));
        for (int p = 0; p < np; p++)
            grp_of[p] = -1;
        int ng = 0;
        int *cnt = calloc((size_t)s->n_cliques, sizeof(int));
        int *op_pair = malloc((size_t)np * sizeof(int));
        int *op_other = malloc((size_t)np * sizeof(int));
        for (int oi = 0; oi < n; oi++) {
            int v = order[oi];
            int m = 0;
            for (int px = s->po_off[v]; px < s->po_off[v + 1]; px++) {
                int p = s->po_idx[px];
                if (grp_of[p] >= 0 || s->p_d[p] <= 0)
                    continue;
                int other = (s->p_i[p] == v) ? s->p_j[p] : s->p_i[p];
                if (s->cv_off[other] == s->cv_off[other + 1])
                    continue;
                op_pair[m] = p;
                op_other[m] = other;
                m++;
            }
            while (m >= 2) {
                memset(cnt, 0, (size_t)s->n_cliques * sizeof(int));
                for (int t = 0; t < m; t++)
                    for (int qx = s->cv_off[op_other[t]]; qx < s->cv_off[op_other[t] + 1]; qx++)
                        cnt[s->cv_idx[qx]]++;
                int kb = 0;
                for (int q = 1; q < s->n_cliques; q++)
                    if (cnt[q] > cnt[kb])
                        kb = q;
                if (cnt[kb] < 2)
                    break;
                int w = 0;
                for (int t = 0; t < m; t++) {
                    if (in_cl[(size_t)kb * n + op_other[t]]) {
                        grp_of[op_pair[t]] = ng;
                    } else {
                        op_pair[w] = op_pair[t];
                        op_other[w] = op_other[t];
                        w++;
                    }
                }
                m = w;
                ng++;
            }
        }
        free(op_pair);
        free(op_other);
        free(cnt);
        free(in_cl);
        free(order);
        s->n_groups = ng;
        s->g_off = calloc((size_t)ng + 2, sizeof(int));
        for (int p = 0; p < np; p++)
            if (grp_of[p] >= 0)
                s->g_off[grp_of[p] + 1]++;
        for (int g = 0; g < ng; g++)
            s->g_off[g + 1] += s->g_off[g];
        s->g_mem = malloc((size_t)(s->g_off[ng] + 1) * sizeof(int));
        s->g_contrib = calloc((size_t)ng + 1, sizeof(int64_t));
        {
            int *fill = calloc((size_t)ng + 1, sizeof(int));
            for (int p = 0; p < np; p++)
                if (grp_of[p] >= 0)
                    s->g_mem[s->g_off[grp_of[p]] + fill[grp_of[p]]++] = p;
            free(fill);
        }
        memcpy(s->p_group, grp_of, (size_t)np * sizeof(int));
        for (int g = 0; g < ng; g++)
            refresh_group(s, g);
        free(grp_of);
    } else {
        s->g_off = calloc(2, sizeof(int));
        s->g_mem = malloc(sizeof(int));
        s->g_contrib = calloc(1, sizeof(int64_t));
    }

    s->trail_cap = 1024;
    s->trail = malloc((size_t)s->trail_cap * sizeof(TrailEntry));
    s->trail_len = 0;

    struct timespec t0;
    clock_gettime(CLOCK_MONOTONIC, &t0);
    if (deadline_s > 0)
        s->has_deadline = 1;

    /* Anytime optimization runs use a restart portfolio: a few short
     * probes under different value orders secure a strong incumbent
     * cheaply (incumbent quality is very order-sensitive), then the full
     * remaining budget runs the exact search, which the incumbent lets
     * prune much harder. A probe that exhausts the space early already
     * constitutes the optimality proof. */
    int use_restarts = s->has_deadline && !decision_only && !first_feasible && nc > 0;
    int done_early = 0;
    if (n > 0 && use_restarts) {
        double slice = deadline_s * 0.05;
        if (slice > 0.06)
            slice = 0.06;
        for (int r = 0; r < 4; r++) {
            clock_gettime(CLOCK_MONOTONIC, &s->deadline);
            s->deadline.tv_sec += (time_t)slice;
            s->deadline.tv_nsec += (long)((slice - (double)(time_t)slice) * 1e9);
            if (s->deadline.tv_nsec >= 1000000000L) {
                s->deadline.tv_sec++;
                s->deadline.tv_nsec -= 1000000000L;
            }
            s->timed_out = 0;
            dfs(s, 0);
            if (!s->timed_out) {
                done_early = 1;
                break;
            }
            for (int i = 0; i < n; i++) {
                int *dom = s->domv + s->doff[i];
                for (int k = s->dsize[i] - 1; k > 0; k--) {
                    int x = (int)(rng_next(&rng) % (uint64_t)(k + 1));
                    int tmp = dom[k];
                    dom[k] = dom[x];
                    dom[x] = tmp;
                }
            }
        }
    }
    if (n > 0 && !done_early) {
        if (s->has_deadline) {
            s->deadline = t0;
            s->deadline.tv_sec += (time_t)deadline_s;
            s->deadline.tv_nsec += (long)((deadline_s - (double)(time_t)deadline_s) * 1e9);
            if (s->deadline.tv_nsec >= 1000000000L) {
                s->deadline.tv_sec++;
                s->deadline.tv_nsec -= 1000000000L;
            }
        }
        s->timed_out = 0;
        dfs(s, 0);
    }

    out_flags[0] = s->have_best ? 1 : 0;
    out_flags[1] = s->timed_out ? 1 : 0;
    *out_value = s->have_best ? s->best_value : 0;
    if (s->have_best)
        for (int i = 0; i < n; i++)
            out_assign[i] = s->best[i];

    free(s->domv);
    free(s->doff);
    free(s->dsize);
    free(s->val);
    free(s->has_val);
    free(s->best);
    free(s->changed);
    free(s->adj_off);
    free(s->adj_other);
    free(s->adj_kind);
    free(s->adj_param);
    free(s->adj_first);
    free(s->cl_off);
    free(s->cl_mem);
    free(s->cv_off);
    free(s->cv_idx);
    free(s->val_stamp);
    free(s->cl_stamp);
    free(s->p_i);
    free(s->p_j);
    free(s->p_coff);
    free(s->p_bucket);
    free(s->p_ub);
    free(s->p_mv);
    free(s->p_ubsat);
    free(s->p_d);
    free(s->p_decided);
    free(s->p_exact);
    free(s->p_nviol);
    free(s->p_group);
    free(s->pc_kind);
    free(s->pc_param);
    free(s->pc_w);
    free(s->po_off);
    free(s->po_idx);
    free(s->pair_count);
    free(s->g_off);
    free(s->g_mem);
    free(s->g_contrib);
    free(s->trail);
    return 0;
}
