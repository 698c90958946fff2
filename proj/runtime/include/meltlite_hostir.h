/* Miniature host compiler IR: nodes, single-assignment statements, basic
   blocks, functions, iteration entry points and a small pass manager.
   All host objects are stuff: arena-allocated per function, never collected. */
#ifndef MELTLITE_HOSTIR_H
#define MELTLITE_HOSTIR_H

#ifdef __cplusplus
extern "C" {
#endif

typedef struct hi_node_st *hi_node_t;
typedef struct hi_stmt_st *hi_stmt_t;
typedef struct hi_stmtseq_st *hi_stmtseq_t;
typedef struct hi_bb_st *hi_bb_t;
typedef struct hi_fun_st *hi_fun_t;

enum hi_node_kind {
  HI_NONE = 0,
  HI_VAR_DECL,       /* (name, type) */
  HI_RECORD_TYPE,    /* (name, fields...) */
  HI_FIELD_DECL,     /* (name, type) */
  HI_IDENTIFIER,     /* text */
  HI_INTEGER_CST,    /* value */
  HI_ARRAY_TYPE,     /* (elem, index) */
  HI_INTEGER_TYPE,   /* (min, max, size) */
  HI_ARRAY_REF,      /* (base, index) */
  HI_COMPONENT_REF   /* (decl, field) */
};

enum hi_stmt_kind { HI_STMT_NONE = 0, HI_ASSIGN_SINGLE };

/* nodes; every accessor returns a cleared result on a null or mismatched node */
enum hi_node_kind hi_node_code(hi_node_t n);
hi_node_t hi_node_operand(hi_node_t n, int i);
int hi_node_noperands(hi_node_t n);
const char *hi_identifier_text(hi_node_t n);
long hi_integer_cst_value(hi_node_t n);
hi_node_t hi_decl_name(hi_node_t decl);
hi_node_t hi_decl_type(hi_node_t decl);
int hi_record_nfields(hi_node_t rec);
hi_node_t hi_record_field(hi_node_t rec, int i);

/* statements */
enum hi_stmt_kind hi_stmt_code(hi_stmt_t s);
int hi_assign_single_p(hi_stmt_t s);
hi_node_t hi_assign_lhs(hi_stmt_t s);
hi_node_t hi_assign_rhs1(hi_stmt_t s);

/* sequences, blocks, functions */
int hi_stmtseq_length(hi_stmtseq_t q);
hi_stmt_t hi_stmtseq_at(hi_stmtseq_t q, int i);
hi_stmtseq_t hi_bb_seq(hi_bb_t bb);
int hi_bb_index(hi_bb_t bb);
int hi_fun_nbb(hi_fun_t f);
hi_bb_t hi_fun_bb(hi_fun_t f, int i);
int hi_fun_nlocals(hi_fun_t f);
hi_node_t hi_fun_local(hi_fun_t f, int i);
hi_node_t hi_fun_decl(hi_fun_t f);
const char *hi_fun_name(hi_fun_t f);

/* the function currently run through the passes */
hi_fun_t hi_cfun(void);
void hi_set_cfun(hi_fun_t f);

/* fixtures */
hi_fun_t hi_parse(const char *text, char *errbuf, int errlen);
void hi_fun_free(hi_fun_t f);

/* pass manager */
typedef void (*hi_pass_fn)(hi_fun_t f, void *data);
int hi_register_pass(const char *name, hi_pass_fn fn, void *data, const char *after);
int hi_run_passes(hi_fun_t f);
void hi_clear_passes(void);

#ifdef __cplusplus
}
#endif

#endif /* MELTLITE_HOSTIR_H */
