package org.example.shop.util;

public final class Validation {
    private Validation() {
    }

    public static double requirePositive(double value) {
        if (value <= 0) {
            throw new IllegalArgumentException("must be positive: " + value);
        }
        return value;
    }
}
