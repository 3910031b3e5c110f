package org.example.shop.repo;

import java.util.Optional;

import org.example.shop.model.Order;

public interface OrderRepository {
    void save(Order order);

    Optional<Order> findById(long id);
}
