/* Minimal consumer of the C ABI: generate a family, plant a
 * 2-encryption instance, recover the keys by meet-in-the-middle, and
 * print the ledger. Build (from the workspace root):
 *
 *   cargo build -p qmitm-ffi
 *   cc crates/ffi/examples/demo.c target/debug/libqmitm_ffi.a \
 *      -Icrates/ffi/include -lpthread -ldl -lm -o demo && ./demo
 */
#include <stdio.h>
#include "qmitm.h"

int main(void) {
    QmitmFamily *family = NULL;
    QmitmInstance *instance = NULL;
    QmitmAttackResult result;
    uint64_t keys[2] = {3, 11};
    uint32_t plaintexts[2] = {7, 42};

    if (qmitm_family_generate(2024, 16, 4096, &family) != QMITM_STATUS_OK) {
        fprintf(stderr, "family: %s\n", qmitm_last_error_message());
        return 1;
    }
    if (qmitm_instance_plant(family, 2, keys, plaintexts, 2, &instance) != QMITM_STATUS_OK) {
        fprintf(stderr, "plant: %s\n", qmitm_last_error_message());
        return 1;
    }
    if (qmitm_attack_run(instance, QMITM_ALGORITHM_MITM2, &result) != QMITM_STATUS_OK) {
        fprintf(stderr, "attack: %s\n", qmitm_last_error_message());
        return 1;
    }
    printf("recovered (%llu, %llu) verified=%u\n",
           (unsigned long long)result.keys[0],
           (unsigned long long)result.keys[1],
           result.verified);
    printf("ledger: %llu forward, %llu inverse, %llu time, %llu peak memory\n",
           (unsigned long long)result.forward_queries,
           (unsigned long long)result.inverse_queries,
           (unsigned long long)result.time_units,
           (unsigned long long)result.peak_memory_units);

    qmitm_instance_free(instance);
    qmitm_family_free(family);
    return (result.keys[0] == 3 && result.keys[1] == 11 && result.verified) ? 0 : 2;
}
