package org.example.shop.model;

public class Product extends BaseEntity {
    private String sku;
    private double price;

    public Product(String sku, double price) {
        this.sku = sku;
        this.price = price;
    }

    public String getSku() {
        return sku;
    }

    public double getPrice() {
        return price;
    }

    public String describe(String prefix) {
        String label = prefix + sku;
        return label;
    }
}
