/* CRC-32 of a fixed buffer; exits 0 when the checksum is right. */
#include <stdint.h>
#include <stdlib.h>

static uint32_t crc32(const unsigned char *buf, size_t len)
{
    uint32_t crc = 0xFFFFFFFFu;
    for (size_t i = 0; i < len; i++) {
        crc ^= buf[i];
        for (int k = 0; k < 8; k++)
            crc = (crc >> 1) ^ (0xEDB88320u & -(crc & 1u));
    }
    return ~crc;
}

int main(int argc, char **argv)
{
    static const unsigned char msg[] = "123456789";
    long loops = argc > 1 ? atol(argv[1]) : 1;
    volatile uint32_t sink = 0;
    for (long i = 0; i < loops; i++)
        for (int r = 0; r < 20000; r++)
            sink = crc32(msg, sizeof msg - 1);
    return sink == 0xCBF43926u ? 0 : 1;
}
