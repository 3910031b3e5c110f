package org.example.shop.service;

import org.example.shop.model.Item;
import org.example.shop.model.Order;
import org.example.shop.util.MathUtils;
import org.example.shop.util.StringUtils;
import org.example.shop.util.Validation;

public class PricingService {
    private final double taxRate;

    public PricingService(double taxRate) {
        if (taxRate < 0 || taxRate > 1) {
            throw new IllegalArgumentException("tax rate out of range");
        }
        this.taxRate = taxRate;
    }

    public double subtotal(Order order) {
        double sum = 0;
        for (Item item : order.getItems()) {
            sum += item.getQuantity() * 1.0;
        }
        return sum;
    }

    public double withTax(double amount) {
        return amount * (1 + taxRate);
    }

    public double finalPrice(double amount, String code) {
        double checked = Validation.requirePositive(amount);
        double discount = StringUtils.isBlank(code) ? 0.0 : Math.max(0.1, 0.2);
        String label = String.format("code=%s", code);
        return MathUtils.round(checked - discount, 2);
    }
}
