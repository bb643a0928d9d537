/* cc smoke.c -I../include ../../../target/release/libthreshold_lab_ffi.a -lm -lpthread -ldl */
#include <stdio.h>
#include "threshold_lab.h"

int main(void) {
    TlConfig *cfg = tl_config_square_well(5.783185963);
    TlMedium *medium = NULL;
    TlClassification c;
    if (tl_medium_new(cfg, &medium) != TL_STATUS_OK) {
        char msg[256];
        tl_last_error(msg, sizeof msg);
        fprintf(stderr, "error: %s\n", msg);
        return 1;
    }
    tl_medium_classification(medium, &c);
    printf("threshold-lab %s: classification %d\n", tl_version(), (int)c);
    tl_medium_free(medium);
    tl_config_free(cfg);
    return c == TL_CLASSIFICATION_FIRST_KIND ? 0 : 1;
}
