#include <stdio.h>
#include <string.h>

#include "mdfcda.h"

#define CHECK(call)                                                         \
    do {                                                                    \
        MdfcdaStatus s_ = (call);                                           \
        if (s_ != MDFCDA_STATUS_OK) {                                       \
            const char *msg = mdfcda_last_error();                          \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_, msg ? msg : ""); \
            return 1;                                                       \
        }                                                                   \
    } while (0)

int main(void) {
    MdfcdaInstanceBuilder *b = NULL;
    CHECK(mdfcda_builder_new(2, &b));
    int64_t c0_prices[] = {12000, 8000};
    uint32_t c0_qty[] = {1, 2};
    int64_t p0_prices[] = {6000, 5000};
    uint32_t p0_qty[] = {3, 3};
    CHECK(mdfcda_builder_add_consumer(b, 0, c0_prices, c0_qty, 2, 0.0));
    CHECK(mdfcda_builder_add_provider(b, 0, p0_prices, p0_qty, 2));

    MdfcdaInstance *inst = NULL;
    CHECK(mdfcda_builder_build(b, &inst));
    mdfcda_builder_free(b);

    MdfcdaSolution *sol = NULL;
    CHECK(mdfcda_solve(inst, MDFCDA_SOLVER_MODE_EXACT, 0, 0, &sol));
    bool won = false;
    CHECK(mdfcda_solution_is_winner(sol, 0, &won));
    /* value 280, cost 160 */
    double utility = mdfcda_solution_total_utility(sol);
    if (!won || utility != 120.0) {
        fprintf(stderr, "unexpected result: won=%d utility=%f\n", (int)won, utility);
        return 1;
    }
    mdfcda_solution_free(sol);
    mdfcda_instance_free(inst);

    MdfcdaInstance *bad = NULL;
    if (mdfcda_instance_parse("garbage", &bad) != MDFCDA_STATUS_INVALID_ARGUMENT || mdfcda_last_error() == NULL) {
        fprintf(stderr, "parse error not reported\n");
        return 1;
    }

    MdfcdaFairnessParams p = mdfcda_default_fairness_params();
    double ff = 0.0;
    CHECK(mdfcda_fun_w(2, 1.0, 1, &p, &ff));
    if (ff != 2.0 * (9.0 * 2.0 + 7.0)) {
        fprintf(stderr, "fun_w returned %f\n", ff);
        return 1;
    }
    printf("mdfcda %s ok\n", mdfcda_version());
    return 0;
}
