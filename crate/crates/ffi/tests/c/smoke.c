#include <math.h>
#include <stdio.h>

#include "hlpweak.h"

static int failures = 0;

/* The call must be sequenced before its output is read. */
#define CHECK(what, call, out, want)                 \
    do {                                             \
        HlpStatus status_ = (call);                  \
        expect((what), status_, (out), (want));      \
    } while (0)

static void expect(const char *what, HlpStatus status, double got, double want) {
    if (status != HLP_STATUS_OK || fabs(got - want) > 1e-9 * fabs(want)) {
        fprintf(stderr, "%s: status %d, got %.15g, want %.15g\n", what, (int)status, got, want);
        failures++;
    }
}

int main(void) {
    HlpRadialFunction *f = NULL;
    HlpRadialFunction *img = NULL;
    char *text = NULL;
    double v = 0.0, stmt = 0.0, proof = 0.0;
    bool flag = false;
    const double ps[2] = {3.0, 3.0};
    const double betas[2] = {0.5, 0.5};

    printf("hlpweak %s\n", hlp_version());
    if (hlp_radial_parse("1*r^1 on (0,1]", &f) != HLP_STATUS_OK) {
        fprintf(stderr, "%s\n", hlp_last_error_message());
        return 1;
    }
    CHECK("evaluate", hlp_radial_evaluate(f, 0.5, &v), v, 0.5);
    CHECK("apply_hlp", hlp_apply_hlp(f, 1, 2.0, &v), v, 0.5);
    CHECK("weak_norm", hlp_weak_norm(f, 1.0, 0.0, 1, &v), v, 0.5);
    CHECK("strong_norm", hlp_strong_norm(f, 1.0, 0.0, 1, &v), v, 1.0);
    if (hlp_apply_hlp_symbolic(f, 1, &img) != HLP_STATUS_OK || hlp_radial_to_string(img, &text) != HLP_STATUS_OK) {
        failures++;
    } else {
        printf("H f = %s\n", text);
    }
    hlp_string_free(text);
    CHECK("weak_norm(H f)", hlp_weak_norm(img, 1.0, 0.0, 1, &v), v, 2.0);
    CHECK("sphere", hlp_unit_sphere_area(3, &v), v, 4.0 * 3.14159265358979323846);
    CHECK("thm21", hlp_thm21_constants(3.0, 2.0, 0.5, 0.0, 1, &stmt, &proof, &flag), proof, 4.316987751628178);
    CHECK("thm22", hlp_thm22_constant(0.0, 1, &v), v, 2.0);
    CHECK("kernel_constant", hlp_kernel_constant("hlp", 1, 1, ps, betas, 1e-10, &v), v, 3.052571313475551);
    hlp_kernel_bound("hilbert", 2, 1, ps, betas, 2.0, 1.0, 1e-6, &v);
    if (hlp_radial_parse("r^ on (0,1]", &img) != HLP_STATUS_PARSE || hlp_last_error_message() == NULL) {
        failures++;
    }
    hlp_radial_free(img);
    hlp_radial_free(f);
    printf("%d failures\n", failures);
    return failures != 0;
}
