/* Public interface of the meltlite runtime, as used by translated modules.
   Generated units include this header and meltlite_hostir.h only. */
#ifndef MELTLITE_RUNTIME_H
#define MELTLITE_RUNTIME_H

#include <stddef.h>
#include <stdio.h>
#include <string.h>

#include "meltlite_hostir.h"

#ifdef __cplusplus
extern "C" {
#endif

/* Opaque value reference; the null pointer is nil. */
typedef struct mlt_value_st *mlt_val;

/* One runtime context per thread of control. */
typedef struct mlt_ctx_st mlt_ctx;

/* Common prefix of every call frame. Generated routines declare a frame
   record with this exact prefix followed by `mcfr_varptr[mcfr_nbvar]` and
   their stuff members, and chain it through the context's top frame. */
struct mlt_callframe {
  int mcfr_nbvar;                  /* number of local values */
  const char *mcfr_flocs;          /* "file:line" location string */
  mlt_val mcfr_clos;               /* current closure */
  struct mlt_callframe *mcfr_prev; /* link to previous frame */
  mlt_val mcfr_varptr[];           /* local values */
};

/* Secondary arguments and results. Arguments are passed by value except
   values, passed by the address of the caller's frame slot; results are
   passed as addresses of the caller's destinations. Descriptor strings use
   one character per c-type: v value, l long, s cstring, n hnode, t hstmt,
   q hstmtseq, b hbb. */
union mlt_param {
  mlt_val *bp_aptr;
  long bp_long;
  long *bp_longptr;
  const char *bp_cstring;
  const char **bp_cstringptr;
  hi_node_t bp_hnode;
  hi_node_t *bp_hnodeptr;
  hi_stmt_t bp_hstmt;
  hi_stmt_t *bp_hstmtptr;
  hi_stmtseq_t bp_hstmtseq;
  hi_stmtseq_t *bp_hstmtseqptr;
  hi_bb_t bp_hbb;
  hi_bb_t *bp_hbbptr;
};

/* Signature of every translated routine. The context parameter is named
   `mltctx` in generated code; templates may refer to it by that name. */
typedef mlt_val (*mlt_routine_fn)(mlt_ctx *mltctx, mlt_val mltclos, mlt_val mltfirst,
                                  const char *mltxargdescr, union mlt_param *mltxargtab,
                                  const char *mltxresdescr, union mlt_param *mltxrestab);

/* Entry point of a translated module: meltlite_start_<module>. */
typedef mlt_val (*mlt_module_start_fn)(mlt_ctx *mltctx, mlt_val parentenv);

/* Predefined values, in slot order. */
#define MLT_PREDEF_MAX 128
enum mlt_predef_slot {
  MLT_PREDEF__NONE = 0,
  MLT_PREDEF_CLASS_ROOT = 1,
  MLT_PREDEF_CLASS_NAMED = 2,
  MLT_PREDEF_CLASS_DISCRIMINANT = 3,
  MLT_PREDEF_CLASS_CLASS = 4,
  MLT_PREDEF_CLASS_SYMBOL = 5,
  MLT_PREDEF_CLASS_KEYWORD = 6,
  MLT_PREDEF_CLASS_SEXPR = 7,
  MLT_PREDEF_CLASS_CONTAINER = 8,
  MLT_PREDEF_CLASS_ENVIRONMENT = 9,
  MLT_PREDEF_CLASS_SELECTOR = 10,
  MLT_PREDEF_DISCR_ANY_RECEIVER = 11,
  MLT_PREDEF_DISCR_NULL_RECEIVER = 12,
  MLT_PREDEF_DISCR_INTEGER = 13,
  MLT_PREDEF_DISCR_CONSTANT_INTEGER = 14,
  MLT_PREDEF_DISCR_STRING = 15,
  MLT_PREDEF_DISCR_MULTIPLE = 16,
  MLT_PREDEF_DISCR_CLASS_SEQUENCE = 17,
  MLT_PREDEF_DISCR_LIST = 18,
  MLT_PREDEF_DISCR_PAIR = 19,
  MLT_PREDEF_DISCR_CLOSURE = 20,
  MLT_PREDEF_DISCR_MAP_OBJECTS = 21,
  MLT_PREDEF_DISCR_MAP_STRINGS = 22,
  MLT_PREDEF_DISCR_MAP_HNODES = 23,
  MLT_PREDEF_DISCR_MIXED_LOCATION = 24,
  MLT_PREDEF__LAST
};

/* context */
mlt_ctx *mlt_ctx_create(size_t birth_region_bytes);
void mlt_ctx_destroy(mlt_ctx *ctx);
void mlt_set_debug(mlt_ctx *ctx, int on);
int mlt_debug_enabled(mlt_ctx *ctx);

/* frames */
struct mlt_callframe *mlt_topframe(mlt_ctx *ctx);
void mlt_set_topframe(mlt_ctx *ctx, struct mlt_callframe *fr);

/* predefined values */
mlt_val mlt_predef(mlt_ctx *ctx, int slot);
void mlt_set_predef(mlt_ctx *ctx, int slot, mlt_val v);

/* boxing and constants */
mlt_val mlt_box_long(mlt_ctx *ctx, mlt_val discr, long num);
long mlt_unbox_long(mlt_val v);
mlt_val mlt_make_string(mlt_ctx *ctx, mlt_val discr, const char *text);
const char *mlt_string_text(mlt_val v);
mlt_val mlt_box_stuff(mlt_ctx *ctx, mlt_val discr, char kind, const void *stuff);
mlt_val mlt_intern_symbol(mlt_ctx *ctx, const char *name);
mlt_val mlt_intern_keyword(mlt_ctx *ctx, const char *name);
mlt_val mlt_discr(mlt_val v);
int mlt_magic(mlt_val v);

/* objects */
mlt_val mlt_make_class(mlt_ctx *ctx, const char *name, mlt_val superclass, int nbfields,
                       const char *fieldnames);
mlt_val mlt_make_object(mlt_ctx *ctx, mlt_val klass, int nbfields);
mlt_val mlt_make_named(mlt_ctx *ctx, mlt_val klass, int nbfields, const char *name);
int mlt_is_a(mlt_ctx *ctx, mlt_val v, mlt_val klass);
mlt_val mlt_get_field(mlt_ctx *ctx, mlt_val obj, mlt_val klass, int index);
mlt_val mlt_unsafe_get_field(mlt_val obj, int index);
void mlt_put_field(mlt_ctx *ctx, mlt_val obj, mlt_val klass, int index, mlt_val v);
void mlt_unsafe_put_field(mlt_ctx *ctx, mlt_val obj, int index, mlt_val v);
unsigned mlt_object_hash(mlt_val obj);

/* aggregates */
mlt_val mlt_make_tuple(mlt_ctx *ctx, int size);
void mlt_tuple_put(mlt_ctx *ctx, mlt_val tup, int index, mlt_val v);
mlt_val mlt_tuple_nth(mlt_val tup, int index);
int mlt_tuple_size(mlt_val tup);
mlt_val mlt_make_list(mlt_ctx *ctx);
void mlt_list_append(mlt_ctx *ctx, mlt_val list, mlt_val v);
mlt_val mlt_list_first(mlt_val list);
mlt_val mlt_pair_head(mlt_val pair);
mlt_val mlt_pair_tail(mlt_val pair);
int mlt_list_length(mlt_val list);

/* closures, application and message sending */
mlt_val mlt_make_closure(mlt_ctx *ctx, mlt_routine_fn fn, const char *name, int nbclosed);
void mlt_closure_put(mlt_ctx *ctx, mlt_val clos, int index, mlt_val v);
mlt_val mlt_closure_ref(mlt_val clos, int index);
int mlt_is_closure(mlt_val v);
mlt_val mlt_apply(mlt_ctx *ctx, mlt_val clos, mlt_val first, const char *xargdescr,
                  union mlt_param *xargtab, const char *xresdescr, union mlt_param *xrestab);
mlt_val mlt_send(mlt_ctx *ctx, mlt_val selector, mlt_val receiver, const char *xargdescr,
                 union mlt_param *xargtab, const char *xresdescr, union mlt_param *xrestab);
void mlt_install_method(mlt_ctx *ctx, mlt_val discr, mlt_val selector, mlt_val method);

/* hash maps keyed by objects, strings or host nodes */
mlt_val mlt_make_map(mlt_ctx *ctx, mlt_val discr, int size);
mlt_val mlt_map_get(mlt_ctx *ctx, mlt_val map, mlt_val key);
void mlt_map_put(mlt_ctx *ctx, mlt_val map, mlt_val key, mlt_val v);
mlt_val mlt_map_get_string(mlt_ctx *ctx, mlt_val map, const char *key);
void mlt_map_put_string(mlt_ctx *ctx, mlt_val map, const char *key, mlt_val v);
mlt_val mlt_map_get_hnode(mlt_ctx *ctx, mlt_val map, hi_node_t key);
void mlt_map_put_hnode(mlt_ctx *ctx, mlt_val map, hi_node_t key, mlt_val v);

/* module environments */
mlt_val mlt_make_env(mlt_ctx *ctx, mlt_val parent);
mlt_val mlt_make_env_container(mlt_ctx *ctx, mlt_val env);
void mlt_env_put(mlt_ctx *ctx, mlt_val env, const char *name, mlt_val v);
mlt_val mlt_env_get(mlt_ctx *ctx, mlt_val env, const char *name);

/* mode handlers, the hook behind install_host_pass */
void mlt_install_mode(mlt_ctx *ctx, const char *mode, mlt_val handler);
mlt_val mlt_mode_handler(mlt_ctx *ctx, const char *mode); /* nil when unknown */
const char *mlt_mode_name(mlt_ctx *ctx, int index);       /* null past the last */

/* debugging aids */
void mlt_debug_value(mlt_ctx *ctx, const char *loc, const char *msg, mlt_val v);
void mlt_debug_long(mlt_ctx *ctx, const char *loc, const char *msg, long n);
void mlt_debug_cstring(mlt_ctx *ctx, const char *loc, const char *msg, const char *s);
void mlt_debug_stuff(mlt_ctx *ctx, const char *loc, const char *msg, const char *kind,
                     const void *p);
void mlt_assert_fail(mlt_ctx *ctx, const char *msg, const char *loc);
void mlt_backtrace(mlt_ctx *ctx, FILE *out);
void mlt_warning(mlt_ctx *ctx, const char *loc, const char *msg);

#ifdef __cplusplus
}
#endif

#endif /* MELTLITE_RUNTIME_H */
