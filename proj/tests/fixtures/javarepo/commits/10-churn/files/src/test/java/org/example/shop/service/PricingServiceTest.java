package org.example.shop.service;

public class PricingServiceTest {
    public void taxIsApplied() {
        PricingService pricing = new PricingService(0.5);
        assert pricing.withTax(2.0) == 3.0;
        PricingService zero = new PricingService(0.0);
        assert zero.withTax(2.0) == 2.0;
        assert zero.withTax(0.0) == 0.0;
    }
}
